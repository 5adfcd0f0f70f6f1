#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

// Seed derivation and portable draws. std::mt19937_64's raw output is
// pinned by the standard; the distributions are not, so draws go through
// the explicit transforms below to keep frozen test values stable.
namespace dccal::rng {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d649bb133111ebULL;
  return x ^ (x >> 31);
}

enum Stream : uint64_t { kJitter = 1, kNoise = 2, kFocus = 3 };

inline std::mt19937_64 frame_engine(uint64_t seed, uint64_t stream, uint64_t frame_index) {
  return std::mt19937_64(splitmix64(splitmix64(seed ^ splitmix64(stream)) + frame_index));
}

// Uniform in (0, 1].
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>((eng() >> 11) + 1) * 0x1.0p-53;
}

// Box-Muller, one draw per call (two uniforms consumed, nothing cached).
inline double normal(std::mt19937_64& eng, double sigma) {
  const double u1 = uniform01(eng);
  const double u2 = uniform01(eng);
  return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace dccal::rng
