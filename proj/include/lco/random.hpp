#pragma once

// Portable random helpers. std::*_distribution output is implementation
// defined, so anything that feeds a reproducible trajectory goes through here
// and only consumes raw mt19937_64 words (whose sequence the standard fixes).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace lco {

using Rng = std::mt19937_64;

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Box-Muller, one draw per call (the second variate is discarded so the
// stream position only depends on the number of calls).
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

}  // namespace lco
