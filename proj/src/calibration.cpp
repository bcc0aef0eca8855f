#include "threshova/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "threshova/distributions.hpp"
#include "threshova/errors.hpp"
#include "threshova/parallel.hpp"
#include "threshova/rng.hpp"
#include "threshova/thresholding.hpp"

namespace threshova {

Calibration Calibration::closed_form(double lambda, double alpha) {
  Calibration c;
  c.lambda_alpha = lambda;
  c.alpha = alpha;
  c.source = Source::ClosedForm;
  return c;
}

double sample_null_pivot(const NullSampler& sampler, std::uint64_t draw_index, int* attempts) {
  if (!sampler.design) throw ConfigError("null sampler has no design attached");
  const PreparedDesign& prep = *sampler.design;
  const Eigen::Index N = prep.n();
  // Retries re-key the substream through the attempt counter so a rejected
  // draw never shifts any other draw's values.
  for (int attempt = 0; attempt < 100; ++attempt) {
    Substream rng(sampler.seed, sampler.stream + (static_cast<std::uint64_t>(attempt) << 32),
                  draw_index);
    Eigen::VectorXd z = rng.normal_vector(N);
    double sig;
    try {
      sig = sampler.sigma.null_draw(z);
    } catch (const ZeroVarianceError&) {
      continue;
    }
    if (attempts) *attempts = attempt + 1;
    Eigen::VectorXd za = prep.project_out(z);
    return min_null_threshold(za, prep) / sig;
  }
  throw CalibrationError("null pivot draw " + std::to_string(draw_index) +
                         " rejected 100 times (degenerate sigma estimate)");
}

Calibration monte_carlo_threshold(const NullSampler& sampler, double alpha, int K, int threads) {
  if (K < 1000) throw ConfigError("monte_carlo_threshold: K must be at least 1000");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("monte_carlo_threshold: alpha must lie in (0,1)");

  Calibration cal;
  cal.alpha = alpha;
  cal.source = Calibration::Source::MonteCarlo;
  cal.K = K;
  cal.seed = sampler.seed;
  cal.sample.resize(K);

  std::atomic<long> rejected{0};
  parallel_for(K, resolve_threads(threads), [&](long i) {
    int attempts = 1;
    cal.sample[static_cast<std::size_t>(i)] =
        sample_null_pivot(sampler, static_cast<std::uint64_t>(i), &attempts);
    if (attempts > 1) rejected += attempts - 1;
  });
  if (rejected.load() > K / 100)
    throw CalibrationError("more than 1% of null draws rejected for zero variance");

  std::sort(cal.sample.begin(), cal.sample.end());
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * K - 1e-9));
  rank = std::max<std::size_t>(1, std::min<std::size_t>(rank, cal.sample.size()));
  cal.lambda_alpha = cal.sample[rank - 1];
  return cal;
}

double closed_form_threshold_oneway(int T, int R, double alpha, ThresholdMode mode) {
  if (T < 2) throw DomainError("closed_form_threshold_oneway: T must be >= 2");
  if (R < 1) throw DomainError("closed_form_threshold_oneway: R must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("closed_form_threshold_oneway: alpha must lie in (0,1)");
  double sqrtR = std::sqrt(static_cast<double>(R));
  if (mode == ThresholdMode::Block)
    return sqrtR * std::sqrt(chi_square_quantile(1.0 - alpha, T));
  double p = (1.0 - std::pow(1.0 - alpha, 1.0 / T)) / 2.0;
  return -sqrtR * std_normal_quantile(p);
}

double fisher_equivalent_threshold(int T, int N, int R, double alpha) {
  if (N <= T)
    throw DegreesOfFreedomError("fisher_equivalent_threshold: need N > T for residual df");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("fisher_equivalent_threshold: alpha must lie in (0,1)");
  double f = fisher_f_quantile(1.0 - alpha, T - 1, N - T);
  return std::sqrt(static_cast<double>(R) * (T - 1) * f);
}

double canonical_max_threshold(int N, double alpha) {
  if (N < 1) throw DomainError("canonical_max_threshold: N must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("canonical_max_threshold: alpha must lie in (0,1)");
  double p = (1.0 - std::exp(std::log1p(-alpha) / N)) / 2.0;
  return -std_normal_quantile(p);
}

double qut_alpha(int Q) {
  if (Q <= 1) throw DomainError("qut_alpha: Q must be at least 2");
  return 1.0 / std::sqrt(M_PI * std::log(static_cast<double>(Q)));
}

Calibration quantile_universal_threshold(const NullSampler& sampler, int Q, int K, int threads) {
  return monte_carlo_threshold(sampler, qut_alpha(Q), K, threads);
}

double mc_p_value(double observed, const Calibration& calibration) {
  if (calibration.sample.empty())
    throw ConfigError("mc_p_value: calibration carries no Monte Carlo sample");
  // Sample is sorted ascending; count draws >= observed.
  auto it = std::lower_bound(calibration.sample.begin(), calibration.sample.end(), observed);
  auto ge = static_cast<double>(std::distance(it, calibration.sample.end()));
  return (1.0 + ge) / (static_cast<double>(calibration.sample.size()) + 1.0);
}

}  // namespace threshova
