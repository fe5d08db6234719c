#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace seqc {

// Deterministic seed splitting: every stochastic element of a run (noise,
// sample draws, power-method start vectors) takes its own stream derived
// from the user seed with splitmix64, so results are identical across
// platforms and independent of evaluation order.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag,
                                 std::uint64_t index = 0) {
  return splitmix64(splitmix64(base ^ tag) + index);
}

// Stream tags for derive_seed.
inline constexpr std::uint64_t kSeedTagNoise = 0x6e6f697365ull;       // "noise"
inline constexpr std::uint64_t kSeedTagPhantom = 0x7068616e74ull;     // "phant"
inline constexpr std::uint64_t kSeedTagPower = 0x706f776572ull;       // "power"
inline constexpr std::uint64_t kSeedTagAemSample = 0x61656d73ull;     // "aems"

// std::mt19937_64 output is fully specified by the standard; the helpers
// below avoid std::*_distribution, whose streams are implementation-defined.

/// Uniform double in [0, 1).
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in (0, 1].
inline double uniform_unit_open(std::mt19937_64& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Rejection sampling, unbiased.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

/// Standard normal via Box-Muller. Draws two uniforms per call.
inline double standard_normal(std::mt19937_64& rng) {
  const double u1 = uniform_unit_open(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace seqc
