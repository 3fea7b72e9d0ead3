#pragma once

#include <cstdint>
#include <random>

namespace pctl_smc {

/// Engine used everywhere a seed matters. The standard fixes its output
/// sequence, unlike the std distributions, so every derived value below is
/// computed by hand.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n), n > 0, by rejection (no modulo bias).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - Rng::max() % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

}  // namespace pctl_smc
