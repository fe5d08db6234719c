#pragma once

#include <cstdint>

#include "seqc/grid.hpp"

namespace seqc {

/// Adds i.i.d. zero-mean Gaussian noise with standard deviation
/// level * (max(x) - min(x)). A constant image (or level 0) comes back
/// unchanged. Deterministic per seed on every platform.
Image add_gaussian_noise(const Image& x, double level, std::uint64_t seed);

/// Salt-and-pepper noise: floor(fraction * pixel count) distinct pixels,
/// drawn uniformly without replacement, each set to 0 or 1 with probability
/// one half. Deterministic per seed.
Image add_impulse_noise(const Image& x, double fraction, std::uint64_t seed);

}  // namespace seqc
