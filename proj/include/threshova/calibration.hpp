#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "threshova/design.hpp"
#include "threshova/rng.hpp"
#include "threshova/variance.hpp"

namespace threshova {

// Source of null pivot draws for a fixed prepared design.  Draw i is fully
// determined by (seed, stream, i), so draws are embarrassingly parallel.
struct NullSampler {
  const PreparedDesign* design = nullptr;  // non-owning, immutable
  SigmaEvaluator sigma;
  std::uint64_t seed = 0;
  std::uint64_t stream = streams::kCalibrate;
};

struct Calibration {
  enum class Source { ClosedForm, MonteCarlo };
  double lambda_alpha = 0.0;
  double alpha = 0.0;
  Source source = Source::ClosedForm;
  int K = 0;
  std::uint64_t seed = 0;
  std::vector<double> sample;  // sorted ascending when Monte Carlo

  static Calibration closed_form(double lambda, double alpha);
};

// One draw of the null pivot:
//   Lambda_0 = max_q ||Xt_q^T (Y0 - P_A Y0)|| / sigma_hat(Y0),  Y0 ~ N(0, I_N),
// block norms as declared.  Draws whose sigma estimate degenerates to zero
// are rejected and redrawn (counted by the caller via the attempts output).
double sample_null_pivot(const NullSampler& sampler, std::uint64_t draw_index,
                         int* attempts = nullptr);

// K-draw Monte Carlo calibration; the threshold is the ceil((1-alpha)K)-th
// order statistic and the sorted sample is kept for p-values.
Calibration monte_carlo_threshold(const NullSampler& sampler, double alpha, int K,
                                  int threads = 1);

// Closed-form thresholds for balanced one-way designs with mu and sigma known:
//   Block:      sqrt(R) * sqrt(chi2_T^{-1}(1-alpha))
//   Coordinate: -sqrt(R) * Phi^{-1}((1 - (1-alpha)^{1/T}) / 2)
double closed_form_threshold_oneway(int T, int R, double alpha, ThresholdMode mode);

// Exact block-test threshold when sigma is the unbiased full-model estimate:
// sqrt(R (T-1) F^{-1}(1-alpha; T-1, N-T)).
double fisher_equivalent_threshold(int T, int N, int R, double alpha);

// Canonical-model max-test threshold: -Phi^{-1}([1 - exp(log(1-alpha)/N)]/2).
double canonical_max_threshold(int N, double alpha);

// alpha = 1 / sqrt(pi log Q), natural log.
double qut_alpha(int Q);

// Monte Carlo threshold at the QUT level for Q groups.
Calibration quantile_universal_threshold(const NullSampler& sampler, int Q, int K,
                                         int threads = 1);

// (1 + #{draws >= observed}) / (K + 1) over the stored null sample.
double mc_p_value(double observed, const Calibration& calibration);

}  // namespace threshova
