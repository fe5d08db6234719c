#pragma once

#include <cstdint>
#include <vector>

#include "seqc/grid.hpp"

namespace seqc {

/// Synthetic piecewise-constant test image: a flat background with a few
/// random disks and rectangles plus an occasional intensity ramp, clamped
/// to [0,1]. Deterministic per seed.
Image make_phantom(int width, int height, std::uint64_t seed);

/// Batch of phantoms with per-index derived seeds; index_offset shifts the
/// seed stream so disjoint corpora (e.g. train vs test) can share one base
/// seed.
std::vector<Image> make_phantoms(int count, int width, int height,
                                 std::uint64_t base_seed,
                                 std::uint64_t index_offset = 0);

}  // namespace seqc
