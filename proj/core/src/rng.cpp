#include "fleetsim/rng.hpp"

#include <limits>

#include "fleetsim/errors.hpp"

namespace fleetsim {

std::int64_t Rng::uniform_int(std::int64_t n) {
  if (n <= 0) {
    throw ValidationError("Rng::uniform_int requires n > 0");
  }
  const auto un = static_cast<std::uint64_t>(n);
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % un;
  std::uint64_t x = gen_();
  while (x >= limit) {
    x = gen_();
  }
  return static_cast<std::int64_t>(x % un);
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::uint64_t state = base;
  std::uint64_t h = splitmix64(state);
  state ^= a;
  h ^= splitmix64(state);
  state ^= b;
  h ^= splitmix64(state);
  return h;
}

}  // namespace fleetsim
