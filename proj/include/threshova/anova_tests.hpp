#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "threshova/calibration.hpp"
#include "threshova/design.hpp"
#include "threshova/thresholding.hpp"
#include "threshova/variance.hpp"

namespace threshova {

struct BlockDetection {
  bool nonzero = false;
  std::vector<bool> coords;  // filled for Coordinate-mode blocks only
};

struct TestOutcome {
  bool reject = false;
  double statistic = 0.0;  // observed pivot
  double threshold = 0.0;  // lambda_alpha
  double p_value = 0.0;    // NaN when the calibration carries no sample
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double sigma_hat = 0.0;
  std::map<std::string, BlockDetection> detections;
  std::vector<std::string> block_names;  // declared order
  ThresholdedFit estimate;               // fit at lambda_alpha * sigma_hat on y_A
  std::vector<Eigen::VectorXd> theta;    // per block, original column basis
  std::map<std::string, std::vector<std::string>> coord_names;  // labels, if any
  Eigen::VectorXd nuisance_coef;         // least squares of y - fit on A
};

// Shared final step of every driver: observed statistic, decision, p-value
// and the thresholded fit, with the exact reject <=> nonzero-fit equivalence.
TestOutcome finish_test(const PreparedDesign& prepared, const Calibration& cal,
                        const Eigen::VectorXd& y, const SigmaEvaluator& sigma,
                        std::uint64_t seed, const SolverConfig& solver = {});

// One-way block thresholding test: statistic ||Xt^T y_A||_2 / sigma_hat.
// With the unbiased full-model sigma and the Fisher-equivalent threshold the
// decision coincides with the F-test.
TestOutcome block_test(const Eigen::VectorXd& y, const Eigen::MatrixXd& A,
                       const Eigen::MatrixXd& X, double alpha, const SigmaEstimator& sigma,
                       const Calibration& cal);

// One-way coordinate thresholding test: statistic ||Xt^T y_A||_inf / sigma_hat;
// per-coordinate detections from the decoupled closed-form fit.
TestOutcome coordinate_test(const Eigen::VectorXd& y, const Eigen::MatrixXd& A,
                            const Eigen::MatrixXd& X, double alpha, const SigmaEstimator& sigma,
                            const Calibration& cal);

// Hybrid test: X enters twice, once block-thresholded and once
// coordinate-thresholded, both quantile rescaled (stage-1 Monte Carlo with
// stage1_K draws) before the max pivot is calibrated with K draws.
TestOutcome oplus_test(const Eigen::VectorXd& y, const Eigen::MatrixXd& A,
                       const Eigen::MatrixXd& X, double alpha, const SigmaEstimator& sigma,
                       int stage1_K, int K, std::uint64_t seed, int threads = 1);

// Same with explicit block scales (on the orthonormal basis) instead of
// stage-1 Monte Carlo; used when the rescaling factors are known in closed
// form.
TestOutcome oplus_test_scaled(const Eigen::VectorXd& y, const Eigen::MatrixXd& A,
                              const Eigen::MatrixXd& X, double alpha,
                              const SigmaEstimator& sigma, double scale_block,
                              double scale_coord, int K, std::uint64_t seed, int threads = 1);

// Multiple comparisons by coordinate thresholding of all pairwise mean
// differences, exact level alpha for any replicate counts.  Pair (t,t') is
// detected when |ybar_t - ybar_t'| / (d_(t,t') sigma_hat) clears the Monte
// Carlo threshold.
TestOutcome tukey_threshold_test(const Eigen::VectorXd& y,
                                 const std::vector<std::string>& group_labels, double alpha,
                                 int K, std::uint64_t seed, int threads = 1);

struct GeneralTestOptions {
  int K1 = 1000;  // stage-1 rescaling draws
  int threads = 1;
  SolverConfig solver{};
  RescalePolicy rescale = RescalePolicy::QuantileRescale;
};

// Full pipeline: prepare -> quantile rescale -> calibrate -> test -> fit.
TestOutcome general_anova_test(const DesignSpec& spec, const Eigen::VectorXd& y, double alpha,
                               const SigmaEstimator& sigma, int K, std::uint64_t seed,
                               const GeneralTestOptions& opts = {});

}  // namespace threshova
