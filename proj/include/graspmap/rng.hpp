#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace graspmap {

/// Mixes seed components into one 64-bit stream seed (splitmix64 finalizer).
inline std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1) + 0x94d049bb133111ebULL * (c + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Uniform double in [lo, hi). Bit-level construction so streams do not
/// depend on standard-library distribution internals.
inline double uniform_double(Rng& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

/// Uniform integer in [lo, hi] inclusive.
inline int uniform_int(Rng& rng, int lo, int hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(rng() % span);
}

/// Standard normal via Box-Muller.
inline double normal_double(Rng& rng, double mean = 0.0, double stddev = 1.0) {
  double u1 = uniform_double(rng, 0.0, 1.0);
  while (u1 <= 0.0) u1 = uniform_double(rng, 0.0, 1.0);
  const double u2 = uniform_double(rng, 0.0, 1.0);
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// Fisher-Yates shuffle driven by the library RNG (stable across platforms).
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace graspmap
