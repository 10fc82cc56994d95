#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fleetsim {

/// Seeded random source with hand-rolled transforms, so that streams are
/// reproducible across standard-library implementations (the std
/// distributions are not pinned by the standard).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Exponential variate with the given mean, by inversion.
  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  /// Uniform integer in [0, n), n > 0. Unbiased (rejection sampling).
  std::int64_t uniform_int(std::int64_t n);

 private:
  std::mt19937_64 gen_;
};

/// Deterministic seed derivation for sweep members and sub-streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

}  // namespace fleetsim
