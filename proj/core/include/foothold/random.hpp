#pragma once

#include <cstdint>
#include <random>

namespace foothold {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Independent generator for item `index` of a run seeded with `seed`.
inline std::mt19937_64 derive_stream(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ull)));
}

/// Uniform double in [lo, hi) from the top 53 bits; stable across standard libraries.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(uniform(rng, 0.0, static_cast<double>(n))) % n;
}

}  // namespace foothold
