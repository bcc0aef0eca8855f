#include "threshova/design.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "threshova/errors.hpp"
#include "threshova/rng.hpp"

namespace threshova {

namespace {

constexpr double kRankTol = 1e-10;  // relative to the largest singular value

void check_full_rank(const Eigen::MatrixXd& M, const std::string& what) {
  if (M.cols() == 0) return;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv[sv.size() - 1] < kRankTol * sv[0])
    throw RankError(what + ": numerically rank deficient (sv ratio " +
                    std::to_string(sv[sv.size() - 1] / sv[0]) + ")");
}

Eigen::MatrixXd thin_q(const Eigen::MatrixXd& M) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
  return qr.householderQ() * Eigen::MatrixXd::Identity(M.rows(), M.cols());
}

// Empirical quantile: the ceil(p*K)-th order statistic of a sorted sample.
double order_statistic_quantile(std::vector<double>& v, double p) {
  std::sort(v.begin(), v.end());
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size()) - 1e-9));
  rank = std::max<std::size_t>(1, std::min(rank, v.size()));
  return v[rank - 1];
}

}  // namespace

Eigen::VectorXd PreparedDesign::project_out(const Eigen::VectorXd& y) const {
  if (QA.cols() == 0) return y;
  return y - QA * (QA.transpose() * y);
}

double PreparedDesign::block_statistic(std::size_t q, const Eigen::VectorXd& v) const {
  const PreparedBlock& b = blocks[q];
  Eigen::VectorXd u = b.scale * (b.W.transpose() * v);
  return b.mode == ThresholdMode::Block ? u.norm() : u.lpNorm<Eigen::Infinity>();
}

Eigen::VectorXd project_out_nuisance(const Eigen::VectorXd& y, const Eigen::MatrixXd& A) {
  if (A.cols() == 0) return y;
  if (A.rows() != y.size())
    throw ConfigError("project_out_nuisance: dimension mismatch between y and A");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  if (sv[sv.size() - 1] < kRankTol * sv[0])
    throw SingularDesignError("nuisance matrix is rank deficient");
  Eigen::MatrixXd Q = thin_q(A);
  return y - Q * (Q.transpose() * y);
}

Eigen::MatrixXd orthonormalize_block(const Eigen::MatrixXd& X, const std::string& name) {
  const std::string label = name.empty() ? "block" : "block '" + name + "'";
  if (X.cols() == 0) throw ConfigError(label + ": empty block");
  check_full_rank(X, label);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  Eigen::MatrixXd W = qr.householderQ() * Eigen::MatrixXd::Identity(X.rows(), X.cols());
  Eigen::MatrixXd R =
      qr.matrixQR().topLeftCorner(X.cols(), X.cols()).triangularView<Eigen::Upper>();
  // Fix signs so diag(R) > 0; this makes the factorization unique, and an
  // already-orthogonal X comes back as its own columns normalized.
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    if (R(j, j) < 0.0) W.col(j) = -W.col(j);
  return W;
}

PreparedDesign prepare_design(const DesignSpec& spec, InitialScale init) {
  PreparedDesign out;
  const Eigen::Index N = spec.A.rows() > 0 ? spec.A.rows()
                                           : (spec.blocks.empty() ? 0 : spec.blocks[0].X.rows());
  if (spec.blocks.empty()) throw ConfigError("design has no tested blocks");
  if (spec.A.cols() > 0) {
    if (spec.A.rows() <= spec.A.cols())
      throw ConfigError("design needs more observations than nuisance columns");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(spec.A);
    const auto& sv = svd.singularValues();
    if (sv[sv.size() - 1] < kRankTol * sv[0])
      throw SingularDesignError("nuisance matrix is rank deficient");
    out.QA = thin_q(spec.A);
  } else {
    out.QA = Eigen::MatrixXd(N, 0);
  }

  for (const BlockSpec& bs : spec.blocks) {
    if (bs.X.rows() != N) throw ConfigError("block '" + bs.name + "': row count mismatch");
    check_full_rank(bs.X, "block '" + bs.name + "'");

    PreparedBlock pb;
    pb.name = bs.name;
    pb.mode = bs.mode;

    Eigen::MatrixXd gram = bs.X.transpose() * bs.X;
    bool diagonal = true;
    for (Eigen::Index i = 0; i < gram.rows() && diagonal; ++i)
      for (Eigen::Index j = 0; j < gram.cols(); ++j)
        if (i != j && std::abs(gram(i, j)) > 1e-8 * std::sqrt(gram(i, i) * gram(j, j))) {
          diagonal = false;
          break;
        }

    if (bs.mode == ThresholdMode::Coordinate) {
      // Coordinate thresholding is not rotation invariant, so the columns
      // must keep their identity: require an orthogonal block and normalize
      // each column instead of mixing them through a QR rotation.
      if (!diagonal)
        throw ConfigError("block '" + bs.name +
                          "': coordinate thresholding requires X^T X diagonal");
      pb.W = bs.X;
      pb.Rfac = Eigen::MatrixXd::Zero(bs.X.cols(), bs.X.cols());
      for (Eigen::Index j = 0; j < bs.X.cols(); ++j) {
        double nrm = bs.X.col(j).norm();
        pb.W.col(j) /= nrm;
        pb.Rfac(j, j) = nrm;
      }
    } else {
      pb.W = orthonormalize_block(bs.X, bs.name);
      pb.Rfac = pb.W.transpose() * bs.X;
    }

    // Each block must keep some mass outside the nuisance range; for
    // Coordinate blocks every column individually, since a nuisance-aligned
    // coordinate would have a degenerate null statistic.
    if (out.QA.cols() > 0) {
      if (bs.mode == ThresholdMode::Coordinate) {
        for (Eigen::Index j = 0; j < pb.W.cols(); ++j) {
          Eigen::VectorXd resid = pb.W.col(j) - out.QA * (out.QA.transpose() * pb.W.col(j));
          if (resid.norm() < 1e-8)
            throw ConfigError("block '" + bs.name + "': column " + std::to_string(j) +
                              " lies in the nuisance range");
        }
      } else {
        Eigen::MatrixXd resid = pb.W - out.QA * (out.QA.transpose() * pb.W);
        if (resid.norm() < 1e-8)
          throw ConfigError("block '" + bs.name + "' lies entirely in the nuisance range");
      }
    }

    pb.scale = 1.0;
    if (init == InitialScale::Natural) {
      // With X^T X = c^2 I the natural working matrix is X itself.
      double c0 = pb.Rfac(0, 0);
      bool scalar = true;
      for (Eigen::Index i = 0; i < pb.Rfac.rows() && scalar; ++i)
        for (Eigen::Index j = 0; j < pb.Rfac.cols(); ++j) {
          double target = (i == j) ? c0 : 0.0;
          if (std::abs(pb.Rfac(i, j) - target) > 1e-8 * std::abs(c0)) {
            scalar = false;
            break;
          }
        }
      if (scalar) pb.scale = c0;
    }
    out.blocks.push_back(std::move(pb));
  }
  return out;
}

Eigen::MatrixXd null_block_statistics(const PreparedDesign& prepared, int K1,
                                      std::uint64_t seed, std::uint64_t stream) {
  const Eigen::Index N = prepared.n();
  Eigen::MatrixXd stats(K1, static_cast<Eigen::Index>(prepared.blocks.size()));
  for (int k = 0; k < K1; ++k) {
    Substream rng(seed, stream, static_cast<std::uint64_t>(k));
    Eigen::VectorXd za = prepared.project_out(rng.normal_vector(N));
    for (std::size_t q = 0; q < prepared.blocks.size(); ++q) {
      const PreparedBlock& b = prepared.blocks[q];
      Eigen::VectorXd u = b.W.transpose() * za;
      stats(k, static_cast<Eigen::Index>(q)) =
          b.mode == ThresholdMode::Block ? u.norm() : u.lpNorm<Eigen::Infinity>();
    }
  }
  return stats;
}

PreparedDesign quantile_rescale(const PreparedDesign& prepared, double alpha,
                                std::uint64_t seed, int K1, RescalePolicy policy) {
  PreparedDesign out = prepared;
  out.policy = policy;
  if (policy == RescalePolicy::None) {
    for (auto& b : out.blocks) b.scale = 1.0;
    return out;
  }
  if (K1 < 1000) throw ConfigError("quantile_rescale: K1 must be at least 1000");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("quantile_rescale: alpha not in (0,1)");

  Eigen::MatrixXd stats = null_block_statistics(prepared, K1, seed, streams::kRescale);
  for (std::size_t q = 0; q < out.blocks.size(); ++q) {
    std::vector<double> col(stats.col(static_cast<Eigen::Index>(q)).data(),
                            stats.col(static_cast<Eigen::Index>(q)).data() + K1);
    double ref;
    if (policy == RescalePolicy::QuantileRescale) {
      ref = order_statistic_quantile(col, 1.0 - alpha);
    } else {
      ref = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(K1);
    }
    if (!(ref > 0.0))
      throw CalibrationError("rescaling for block '" + out.blocks[q].name +
                             "' produced a nonpositive reference statistic");
    out.blocks[q].scale = 1.0 / ref;
  }
  return out;
}

Eigen::MatrixXd encode_factor(const std::vector<std::string>& levels,
                              std::vector<std::string>* level_names) {
  std::map<std::string, int> index;
  for (const auto& s : levels) index.emplace(s, 0);
  if (index.size() < 2)
    throw ConfigError("encode_factor: need at least 2 distinct levels, got " +
                      std::to_string(index.size()));
  int next = 0;
  for (auto& kv : index) kv.second = next++;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(levels.size()),
                                            static_cast<Eigen::Index>(index.size()));
  for (std::size_t i = 0; i < levels.size(); ++i)
    X(static_cast<Eigen::Index>(i), index.at(levels[i])) = 1.0;
  if (level_names) {
    level_names->clear();
    level_names->resize(index.size());
    for (const auto& kv : index) (*level_names)[static_cast<std::size_t>(kv.second)] = kv.first;
  }
  return X;
}

PairwiseDifferences pairwise_difference_transform(const Eigen::VectorXd& y,
                                                  const std::vector<int>& counts) {
  const int T = static_cast<int>(counts.size());
  if (T < 2) throw ConfigError("pairwise differences need at least two groups");
  long total = 0;
  for (int t = 0; t < T; ++t) {
    if (counts[t] < 1)
      throw ConfigError("group " + std::to_string(t + 1) + " has no observations");
    total += counts[t];
  }
  if (total != y.size()) throw ConfigError("pairwise differences: counts do not match y");

  Eigen::VectorXd means(T);
  long pos = 0;
  for (int t = 0; t < T; ++t) {
    means[t] = y.segment(pos, counts[t]).mean();
    pos += counts[t];
  }

  PairwiseDifferences out;
  const int P = T * (T - 1) / 2;
  out.ytilde.resize(P);
  out.d.resize(P);
  int p = 0;
  for (int t = 0; t < T; ++t)
    for (int s = t + 1; s < T; ++s) {
      out.pairs.emplace_back(t, s);
      out.ytilde[p] = means[t] - means[s];
      out.d[p] = std::sqrt(1.0 / counts[t] + 1.0 / counts[s]);
      ++p;
    }
  return out;
}

}  // namespace threshova
