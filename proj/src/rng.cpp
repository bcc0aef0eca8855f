#include "threshova/rng.hpp"

#include "threshova/distributions.hpp"

namespace threshova {

namespace {

// Murmur3 64-bit finalizer; full-avalanche mix used for key derivation.
inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

Substream::Substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t s = mix64(seed + kGolden);
  s = mix64(s ^ (stream * 0xbf58476d1ce4e5b9ULL + kGolden));
  s = mix64(s ^ (index * 0x94d049bb133111ebULL + kGolden));
  state_ = s;
}

std::uint64_t Substream::next_u64() {
  state_ += kGolden;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Substream::uniform() {
  // 53 random bits centered in (0,1); never returns an exact endpoint.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
}

double Substream::normal() { return std_normal_quantile(uniform()); }

Eigen::VectorXd Substream::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

}  // namespace threshova
