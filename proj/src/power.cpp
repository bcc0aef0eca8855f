#include "threshova/power.hpp"

#include <atomic>
#include <cmath>

#include "threshova/anova_tests.hpp"
#include "threshova/calibration.hpp"
#include "threshova/distributions.hpp"
#include "threshova/errors.hpp"
#include "threshova/parallel.hpp"
#include "threshova/rng.hpp"

namespace threshova {

double delta_phi(double theta, double lambda, int R) {
  if (!(lambda > 0.0)) throw DomainError("delta_phi: lambda must be positive");
  double sqrtR = std::sqrt(static_cast<double>(R));
  return std_normal_cdf((lambda - R * theta) / sqrtR) -
         std_normal_cdf((-lambda - R * theta) / sqrtR);
}

double analytic_power(TestKind test, const Alternative& alt, int T, int R, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("analytic_power: lambda must be positive");
  if (test == TestKind::Oplus)
    throw ConfigError("analytic_power: no closed form for the hybrid test");
  if (test == TestKind::Block) {
    double ncp = alt.kind == Alternative::Kind::Dense ? R * T * alt.theta * alt.theta
                                                      : R * alt.theta * alt.theta;
    return 1.0 - chi_square_cdf(lambda * lambda / R, T, ncp);
  }
  double dp = delta_phi(alt.theta, lambda, R);
  double d0 = delta_phi(0.0, lambda, R);
  if (alt.kind == Alternative::Kind::Dense) return 1.0 - std::pow(dp, T);
  return 1.0 - dp * std::pow(d0, T - 1);
}

namespace {

Eigen::MatrixXd oneway_indicator(int T, int R) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T) * R, T);
  for (int t = 0; t < T; ++t)
    for (int r = 0; r < R; ++r) X(static_cast<Eigen::Index>(t) * R + r, t) = 1.0;
  return X;
}

Eigen::VectorXd alternative_theta(const Alternative& alt, int T) {
  Eigen::VectorXd th = Eigen::VectorXd::Zero(T);
  if (alt.kind == Alternative::Kind::Dense)
    th.setConstant(alt.theta);
  else
    th[0] = alt.theta;
  return th;
}

}  // namespace

PowerEstimate mc_power(TestKind test, const Alternative& alt, int T, int R, double alpha,
                       int reps, std::uint64_t seed, const McPowerOptions& opts) {
  if (reps < 100) throw ConfigError("mc_power: need at least 100 replicates");
  const Eigen::Index N = static_cast<Eigen::Index>(T) * R;
  Eigen::MatrixXd X = oneway_indicator(T, R);
  const bool known = opts.sigma.kind == SigmaEstimator::Kind::KnownSigma;

  // Known sigma runs in the known-mean regime (no nuisance); the estimated
  // variant projects out an intercept and recomputes sigma per replicate.
  Eigen::MatrixXd A = known ? Eigen::MatrixXd(N, 0) : Eigen::MatrixXd::Ones(N, 1);

  DesignSpec spec{A, {}};
  if (test == TestKind::Block) {
    spec.blocks.push_back({"block", X, ThresholdMode::Block});
  } else if (test == TestKind::Coordinate) {
    spec.blocks.push_back({"coord", X, ThresholdMode::Coordinate});
  } else {
    spec.blocks.push_back({"o", X, ThresholdMode::Block});
    spec.blocks.push_back({"plus", X, ThresholdMode::Coordinate});
  }
  PreparedDesign prep = prepare_design(spec, InitialScale::Natural);
  SigmaEvaluator eval(opts.sigma, A, X);

  double lambda;
  if (test == TestKind::Oplus) {
    // Quantile rescaling from the closed forms when available, otherwise
    // stage-1 Monte Carlo; then the max pivot is always calibrated by MC.
    if (known) {
      double sqrtR = std::sqrt(static_cast<double>(R));
      prep.blocks[0].scale =
          sqrtR / closed_form_threshold_oneway(T, R, alpha, ThresholdMode::Block);
      prep.blocks[1].scale =
          sqrtR / closed_form_threshold_oneway(T, R, alpha, ThresholdMode::Coordinate);
    } else {
      prep = quantile_rescale(prep, alpha, seed, opts.calibration_K);
    }
    NullSampler sampler{&prep, eval, seed, streams::kCalibrate};
    lambda = monte_carlo_threshold(sampler, alpha, opts.calibration_K, opts.threads).lambda_alpha;
  } else if (known) {
    lambda = closed_form_threshold_oneway(
        T, R, alpha, test == TestKind::Block ? ThresholdMode::Block : ThresholdMode::Coordinate);
  } else if (test == TestKind::Block) {
    lambda = fisher_equivalent_threshold(T, static_cast<int>(N), R, alpha);
  } else {
    NullSampler sampler{&prep, eval, seed, streams::kCalibrate};
    lambda = monte_carlo_threshold(sampler, alpha, opts.calibration_K, opts.threads).lambda_alpha;
  }

  Eigen::VectorXd mean = X * alternative_theta(alt, T);
  std::atomic<long> rejects{0};
  parallel_for(reps, resolve_threads(opts.threads), [&](long i) {
    Substream rng(seed, opts.stream, static_cast<std::uint64_t>(i));
    Eigen::VectorXd y = mean + rng.normal_vector(N);
    double sig = eval.observed(y);
    Eigen::VectorXd y_A = prep.project_out(y);
    double stat = min_null_threshold(y_A, prep) / sig;
    if (stat > lambda) ++rejects;
  });

  PowerEstimate est;
  est.reps = reps;
  est.power = static_cast<double>(rejects.load()) / reps;
  est.se = std::sqrt(est.power * (1.0 - est.power) / reps);
  return est;
}

std::string to_string(TestKind t) {
  switch (t) {
    case TestKind::Block: return "block";
    case TestKind::Coordinate: return "coordinate";
    case TestKind::Oplus: return "oplus";
  }
  return "?";
}

std::string to_string(Alternative::Kind k) {
  return k == Alternative::Kind::Dense ? "dense" : "sparse";
}

}  // namespace threshova
