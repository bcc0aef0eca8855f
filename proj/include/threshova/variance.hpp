#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace threshova {

struct SigmaEstimator {
  enum class Kind { KnownSigma, UnbiasedFullModel, MadHighDim };
  Kind kind = Kind::UnbiasedFullModel;
  double known_value = 1.0;   // KnownSigma only
  double p0_fraction = 0.5;   // MadHighDim only

  static SigmaEstimator known(double value);
  static SigmaEstimator unbiased();
  static SigmaEstimator mad(double p0_fraction = 0.5);
};

// sigma^2 = ||y - P_[A X] y||^2 / (N - rank([A X])).
double unbiased_sigma(const Eigen::VectorXd& y, const Eigen::MatrixXd& A,
                      const Eigen::MatrixXd& X);

// Scale estimate from the low singular-value tail of the principal component
// regression coefficients of X: the coefficients in eigen directions of small
// singular values should essentially be noise, so their spread estimates
// sigma.  Gaussian-consistent MAD (about the median, factor 1.4826) of the
// signed tail values.
double mad_sigma_highdim(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         double p0_fraction = 0.5);

// Variant for designs too wide for one SVD: the estimate is the median over
// `subsets` repetitions of mad_sigma_highdim on `subset_cols` columns drawn
// deterministically from (seed, subset index).  Running it with the same
// arguments replays the identical column draw, which is what a null
// calibration must do.
double mad_sigma_resampled(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           double p0_fraction, int subsets, int subset_cols,
                           std::uint64_t seed);

// Precomputed evaluator bound to a fixed design, usable both on observed data
// and inside null simulation (where KnownSigma standardizes to 1).
class SigmaEvaluator {
 public:
  SigmaEvaluator() = default;
  SigmaEvaluator(const SigmaEstimator& est, const Eigen::MatrixXd& A, const Eigen::MatrixXd& X);

  double observed(const Eigen::VectorXd& y) const;

  // Same recipe applied to a standard normal draw; KnownSigma returns 1.
  double null_draw(const Eigen::VectorXd& z) const;

  const SigmaEstimator& estimator() const { return est_; }

 private:
  double residual_sigma(const Eigen::VectorXd& v) const;
  double mad_sigma(const Eigen::VectorXd& v) const;

  SigmaEstimator est_;
  Eigen::MatrixXd Qfull_;  // orthonormal basis of range([A X]) (Unbiased)
  int df_ = 0;
  Eigen::MatrixXd U_;      // left singular vectors of X (MadHighDim)
  int p0_ = 0;
};

}  // namespace threshova
