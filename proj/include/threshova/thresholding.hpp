#pragma once

#include <vector>

#include <Eigen/Dense>

#include "threshova/design.hpp"

namespace threshova {

struct SolverConfig {
  double s = 1.0;          // smoothness exponent, >= 1
  int max_sweeps = 10000;
  double tol = 1e-8;       // max coefficient change per sweep, and the
                           // fixed-point residual accepted as converged
};

struct ThresholdedFit {
  std::vector<Eigen::VectorXd> gamma;  // one vector per block, declared order
  double lambda = 0.0;
  double s = 1.0;
  bool converged = false;
  int sweeps_used = 0;
  double max_residual = 0.0;  // largest violation of the fixed-point equations

  bool is_zero() const;
};

// (1 - lambda/|z|)_+^s * z, with the continuous extension 0 at z = 0.
double soft_threshold(double z, double lambda, double s = 1.0);

// (1 - lambda/||v||_2)_+^s * v; the zero vector iff lambda >= ||v||_2.
Eigen::VectorXd block_threshold(const Eigen::VectorXd& v, double lambda, double s = 1.0);

// Smallest threshold that nulls every block:
// max over Block blocks of ||Xt_q^T y_A||_2 and Coordinate blocks of
// ||Xt_q^T y_A||_inf, with Xt_q = W_q * d_q.
double min_null_threshold(const Eigen::VectorXd& y_A, const PreparedDesign& prepared);

// Cyclic block/coordinate fixed-point iteration for the hybrid thresholded
// estimate at threshold lambda.  Blocks update in declared order, columns in
// order within Coordinate blocks.  For lambda >= min_null_threshold the zero
// fit is returned without iterating.
ThresholdedFit sbite_solve(const Eigen::VectorXd& y_A, const PreparedDesign& prepared,
                           double lambda, const SolverConfig& cfg = {});

// Coefficients of the fit mapped back to the original column basis of each
// block (theta_q = d_q * Rfac_q^{-1} gamma_q).
std::vector<Eigen::VectorXd> back_transform(const ThresholdedFit& fit,
                                            const PreparedDesign& prepared);

// Penalized least-squares objective at s = 1 (used by diagnostics and tests):
// 0.5 ||y_A - Xt gamma||^2 + lambda * (sum_block ||gamma_q||_2 + sum_coord ||gamma_q||_1).
double hybrid_objective(const Eigen::VectorXd& y_A, const PreparedDesign& prepared,
                        const std::vector<Eigen::VectorXd>& gamma, double lambda);

}  // namespace threshova
