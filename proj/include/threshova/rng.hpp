#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace threshova {

// Counter-based substream generator.  Every (seed, stream, index) triple
// deterministically keys an independent sequence, so draw i of a Monte Carlo
// run can be produced by any worker thread and results never depend on
// scheduling.  Within a substream the state advances as a SplitMix64 walk.
class Substream {
 public:
  Substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

  std::uint64_t next_u64();

  // Uniform on the open interval (0,1).
  double uniform();

  // Standard normal via the inverse CDF; monotone in the underlying uniform.
  double normal();

  Eigen::VectorXd normal_vector(Eigen::Index n);

 private:
  std::uint64_t state_;
};

// Stable stream identifiers used across the library so that independent
// stages never share draws.
namespace streams {
constexpr std::uint64_t kRescale = 1;       // stage-1 quantile rescaling
constexpr std::uint64_t kCalibrate = 2;     // stage-2 threshold calibration
constexpr std::uint64_t kVerify = 3;        // fresh draws for level checks
constexpr std::uint64_t kSimulate = 16;     // harness data simulation
}  // namespace streams

}  // namespace threshova
