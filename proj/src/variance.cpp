#include "threshova/variance.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "threshova/errors.hpp"
#include "threshova/rng.hpp"

namespace threshova {

namespace {

constexpr double kRankTol = 1e-10;
constexpr double kMadConsistency = 1.4826;

// Orthonormal basis of the column space of M (possibly rank deficient).
Eigen::MatrixXd range_basis(const Eigen::MatrixXd& M, int* rank_out) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > kRankTol * sv[0]) ++rank;
  if (rank_out) *rank_out = rank;
  return svd.matrixU().leftCols(rank);
}

double median_inplace(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

SigmaEstimator SigmaEstimator::known(double value) {
  if (!(value > 0.0)) throw DomainError("SigmaEstimator: known sigma must be positive");
  return {Kind::KnownSigma, value, 0.5};
}

SigmaEstimator SigmaEstimator::unbiased() { return {Kind::UnbiasedFullModel, 1.0, 0.5}; }

SigmaEstimator SigmaEstimator::mad(double p0_fraction) {
  if (!(p0_fraction > 0.0 && p0_fraction < 1.0))
    throw DomainError("SigmaEstimator: p0_fraction must lie in (0,1)");
  return {Kind::MadHighDim, 1.0, p0_fraction};
}

double unbiased_sigma(const Eigen::VectorXd& y, const Eigen::MatrixXd& A,
                      const Eigen::MatrixXd& X) {
  Eigen::MatrixXd M(y.size(), A.cols() + X.cols());
  if (A.cols() > 0) M.leftCols(A.cols()) = A;
  M.rightCols(X.cols()) = X;
  int rank = 0;
  Eigen::MatrixXd Q = range_basis(M, &rank);
  if (y.size() <= rank)
    throw DegreesOfFreedomError("unbiased_sigma: saturated model, no residual degrees of freedom");
  Eigen::VectorXd resid = y - Q * (Q.transpose() * y);
  double rss = resid.squaredNorm();
  if (rss <= 1e-24 * std::max(1.0, y.squaredNorm()))
    throw ZeroVarianceError("unbiased_sigma: residual variance is zero");
  return std::sqrt(rss / (y.size() - rank));
}

double mad_sigma_highdim(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         double p0_fraction) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > kRankTol * sv[0]) ++rank;
  if (rank < 4)
    throw RankError("mad_sigma_highdim: design rank " + std::to_string(rank) + " below 4");

  // gamma_LS = U^T y are the principal-component regression coefficients on
  // the singular-value scale, N(gamma, sigma^2 I_rank); singular values come
  // out of the SVD sorted descending, so the tail holds the small ones.
  Eigen::VectorXd gls = svd.matrixU().leftCols(rank).transpose() * y;
  int p0 = std::max(1, static_cast<int>(std::floor(rank * p0_fraction)));
  std::vector<double> tail(gls.data() + (p0 - 1), gls.data() + rank);

  std::vector<double> centered = tail;
  double med = median_inplace(centered);
  std::vector<double> dev(tail.size());
  for (std::size_t i = 0; i < tail.size(); ++i) dev[i] = std::abs(tail[i] - med);
  double mad = median_inplace(dev);
  if (mad <= 0.0) throw ZeroVarianceError("mad_sigma_highdim: zero spread in coefficient tail");
  return kMadConsistency * mad;
}

double mad_sigma_resampled(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           double p0_fraction, int subsets, int subset_cols,
                           std::uint64_t seed) {
  if (subsets < 1) throw ConfigError("mad_sigma_resampled: need at least one subset");
  if (subset_cols < 4 || subset_cols > X.cols())
    throw ConfigError("mad_sigma_resampled: subset size must lie in [4, P]");
  std::vector<double> estimates(static_cast<std::size_t>(subsets));
  for (int s = 0; s < subsets; ++s) {
    // Deterministic Fisher-Yates prefix keyed by (seed, subset index).
    Substream rng(seed, 9, static_cast<std::uint64_t>(s));
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index j = 0; j < X.cols(); ++j) idx[static_cast<std::size_t>(j)] = j;
    for (int j = 0; j < subset_cols; ++j) {
      auto pick = j + static_cast<long>(rng.next_u64() % (X.cols() - j));
      std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(pick)]);
    }
    Eigen::MatrixXd sub(X.rows(), subset_cols);
    for (int j = 0; j < subset_cols; ++j) sub.col(j) = X.col(idx[static_cast<std::size_t>(j)]);
    estimates[static_cast<std::size_t>(s)] = mad_sigma_highdim(sub, y, p0_fraction);
  }
  return median_inplace(estimates);
}

SigmaEvaluator::SigmaEvaluator(const SigmaEstimator& est, const Eigen::MatrixXd& A,
                               const Eigen::MatrixXd& X)
    : est_(est) {
  if (est_.kind == SigmaEstimator::Kind::UnbiasedFullModel) {
    Eigen::MatrixXd M(X.rows(), A.cols() + X.cols());
    if (A.cols() > 0) M.leftCols(A.cols()) = A;
    M.rightCols(X.cols()) = X;
    int rank = 0;
    Qfull_ = range_basis(M, &rank);
    df_ = static_cast<int>(X.rows()) - rank;
    if (df_ < 1)
      throw DegreesOfFreedomError("sigma estimation: saturated model (rank " +
                                  std::to_string(rank) + " of " + std::to_string(X.rows()) + ")");
  } else if (est_.kind == SigmaEstimator::Kind::MadHighDim) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > kRankTol * sv[0]) ++rank;
    if (rank < 4) throw RankError("sigma estimation: rank below 4 for MAD estimator");
    U_ = svd.matrixU().leftCols(rank);
    p0_ = std::max(1, static_cast<int>(std::floor(rank * est_.p0_fraction)));
  }
}

double SigmaEvaluator::residual_sigma(const Eigen::VectorXd& v) const {
  Eigen::VectorXd resid = v - Qfull_ * (Qfull_.transpose() * v);
  double rss = resid.squaredNorm();
  if (rss <= 1e-24 * std::max(1.0, v.squaredNorm()))
    throw ZeroVarianceError("sigma estimation: residual variance is zero");
  return std::sqrt(rss / df_);
}

double SigmaEvaluator::mad_sigma(const Eigen::VectorXd& v) const {
  Eigen::VectorXd gls = U_.transpose() * v;
  int rank = static_cast<int>(U_.cols());
  std::vector<double> tail(gls.data() + (p0_ - 1), gls.data() + rank);
  std::vector<double> centered = tail;
  double med = median_inplace(centered);
  std::vector<double> dev(tail.size());
  for (std::size_t i = 0; i < tail.size(); ++i) dev[i] = std::abs(tail[i] - med);
  double mad = median_inplace(dev);
  if (mad <= 0.0) throw ZeroVarianceError("sigma estimation: zero spread in coefficient tail");
  return kMadConsistency * mad;
}

double SigmaEvaluator::observed(const Eigen::VectorXd& y) const {
  switch (est_.kind) {
    case SigmaEstimator::Kind::KnownSigma:
      return est_.known_value;
    case SigmaEstimator::Kind::UnbiasedFullModel:
      return residual_sigma(y);
    case SigmaEstimator::Kind::MadHighDim:
      return mad_sigma(y);
  }
  throw DomainError("unreachable sigma kind");
}

double SigmaEvaluator::null_draw(const Eigen::VectorXd& z) const {
  if (est_.kind == SigmaEstimator::Kind::KnownSigma) return 1.0;
  return observed(z);
}

}  // namespace threshova
