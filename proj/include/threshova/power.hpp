#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "threshova/rng.hpp"
#include "threshova/variance.hpp"

namespace threshova {

enum class TestKind { Block, Coordinate, Oplus };

struct Alternative {
  enum class Kind { Dense, Sparse };
  Kind kind = Kind::Dense;
  double theta = 0.0;

  static Alternative dense(double theta) { return {Kind::Dense, theta}; }
  static Alternative sparse(double theta) { return {Kind::Sparse, theta}; }
};

// Phi((lambda - R theta)/sqrt(R)) - Phi((-lambda - R theta)/sqrt(R)):
// the probability that one coordinate statistic stays below threshold.
double delta_phi(double theta, double lambda, int R);

// Exact power of the one-way block/coordinate tests (mu, sigma known) at
// threshold lambda:
//   Block  dense  1 - F_{chi2(T, R T theta^2)}(lambda^2 / R)
//   Block  sparse 1 - F_{chi2(T, R theta^2)}(lambda^2 / R)
//   Coord  dense  1 - DeltaPhi(theta)^T
//   Coord  sparse 1 - DeltaPhi(theta) DeltaPhi(0)^{T-1}
double analytic_power(TestKind test, const Alternative& alt, int T, int R, double lambda);

struct PowerEstimate {
  double power = 0.0;
  double se = 0.0;  // sqrt(p(1-p)/reps)
  int reps = 0;
};

struct McPowerOptions {
  SigmaEstimator sigma = SigmaEstimator::known(1.0);
  int calibration_K = 20000;  // for thresholds without a closed form
  std::uint64_t stream = streams::kSimulate;
  int threads = 1;
};

// Monte Carlo power of one test on the one-way design (dense alternatives use
// the all-plus sign pattern).  Replicate i draws from substream
// (seed, stream, i), so different tests evaluated with the same
// (seed, stream) share data, making comparisons paired.
PowerEstimate mc_power(TestKind test, const Alternative& alt, int T, int R, double alpha,
                       int reps, std::uint64_t seed, const McPowerOptions& opts = {});

std::string to_string(TestKind t);
std::string to_string(Alternative::Kind k);

}  // namespace threshova
