#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace threshova {

enum class ThresholdMode { Block, Coordinate };

enum class RescalePolicy { QuantileRescale, MeanRescale, None };

struct BlockSpec {
  std::string name;
  Eigen::MatrixXd X;  // N x P_q, full column rank
  ThresholdMode mode = ThresholdMode::Block;
};

// Full model: nuisance matrix A plus an ordered list of tested blocks.
struct DesignSpec {
  Eigen::MatrixXd A;  // N x K nuisance, K may be 0
  std::vector<BlockSpec> blocks;
};

struct PreparedBlock {
  std::string name;
  ThresholdMode mode = ThresholdMode::Block;
  Eigen::MatrixXd W;     // N x P_q, orthonormal columns
  Eigen::MatrixXd Rfac;  // P_q x P_q with X = W * Rfac (back-transform)
  double scale = 1.0;    // d_q; the working matrix is W * scale
};

// Immutable after construction; shared freely across calibration workers.
struct PreparedDesign {
  Eigen::MatrixXd QA;  // N x K orthonormal basis of range(A); K may be 0
  std::vector<PreparedBlock> blocks;
  RescalePolicy policy = RescalePolicy::None;

  Eigen::Index n() const { return QA.rows(); }

  // y - P_A y without ever forming (A^T A)^{-1}.
  Eigen::VectorXd project_out(const Eigen::VectorXd& y) const;

  // Statistic of one block at its current scale:
  // ||(W d)^T v||_2 for Block mode, ||(W d)^T v||_inf for Coordinate mode.
  double block_statistic(std::size_t q, const Eigen::VectorXd& v) const;
};

// Residual of y after projecting out the columns of A, via Householder QR.
Eigen::VectorXd project_out_nuisance(const Eigen::VectorXd& y, const Eigen::MatrixXd& A);

// Orthonormal basis with range(W) = range(X), deterministic: QR with the
// R factor's diagonal made positive, so an already-orthogonal X yields
// W = X * diag(1/||col||).
Eigen::MatrixXd orthonormalize_block(const Eigen::MatrixXd& X, const std::string& name = "");

// How block scales are seeded at preparation time.  Natural keeps the
// original column scale whenever X^T X = c^2 I (so the working matrix is X
// itself, the scale closed-form thresholds live on); Unit sets d_q = 1.
enum class InitialScale { Unit, Natural };

PreparedDesign prepare_design(const DesignSpec& spec, InitialScale init = InitialScale::Unit);

// Per-block null samples of the block statistic at scale 1 (i.e. of
// ||W_q^T Y0_A|| in the block's norm), used by quantile rescaling and by the
// rescaling diagnostics.  Column q holds the K1 draws for block q.
Eigen::MatrixXd null_block_statistics(const PreparedDesign& prepared, int K1,
                                      std::uint64_t seed, std::uint64_t stream);

// Stage-1 rescaling: for each block set d_q so that the (1-alpha)-quantile
// (QuantileRescale) or the mean (MeanRescale) of the null statistic of
// W_q * d_q equals one.  None resets every d_q to 1.  Draws come from a
// dedicated stream, distinct from final calibration.
PreparedDesign quantile_rescale(const PreparedDesign& prepared, double alpha,
                                std::uint64_t seed, int K1,
                                RescalePolicy policy = RescalePolicy::QuantileRescale);

// 0/1 indicator matrix, one column per distinct level (sorted), no contrast.
Eigen::MatrixXd encode_factor(const std::vector<std::string>& levels,
                              std::vector<std::string>* level_names = nullptr);

struct PairwiseDifferences {
  std::vector<std::pair<int, int>> pairs;  // (t, t'), 0-based, lexicographic
  Eigen::VectorXd ytilde;                  // mean differences per pair
  Eigen::VectorXd d;                       // sqrt(1/R_t + 1/R_t') per pair
};

// Group-mean pairwise differences for groups stacked in order, sizes counts[t].
PairwiseDifferences pairwise_difference_transform(const Eigen::VectorXd& y,
                                                  const std::vector<int>& counts);

}  // namespace threshova
