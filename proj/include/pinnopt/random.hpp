#pragma once

// Seeded sampling helpers. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; the conversions below are written out
// so datasets and initializations do not depend on the standard library's
// distribution implementations.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace pinnopt::rng {

using Engine = std::mt19937_64;

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Engine& e) { return static_cast<double>(e() >> 11) * 0x1.0p-53; }

inline double uniform(Engine& e, double lo, double hi) { return lo + (hi - lo) * uniform01(e); }

/// Standard normal via Box-Muller (consumes two draws).
inline double normal(Engine& e) {
  const double u1 = 1.0 - uniform01(e);  // (0, 1]
  const double u2 = uniform01(e);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Uniform integer in [0, n).
inline std::size_t index(Engine& e, std::size_t n) {
  auto k = static_cast<std::size_t>(uniform01(e) * static_cast<double>(n));
  return k < n ? k : n - 1;
}

/// Fisher-Yates shuffle of 0..n-1.
inline std::vector<std::size_t> permutation(Engine& e, std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[index(e, i)]);
  return p;
}

}  // namespace pinnopt::rng
