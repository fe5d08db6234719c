#pragma once

#include <filesystem>

#include "seqc/grid.hpp"

namespace seqc {

/// Reads a P2 (ASCII) or P5 (binary) PGM file, maxval up to 65535; values
/// are mapped to [0,1] by division by maxval. Throws on bad magic numbers,
/// truncated payloads and invalid maxval.
Image load_pgm(const std::filesystem::path& path);

/// Writes a 16-bit binary (P5) PGM; intensities are clamped to [0,1] and
/// quantized to maxval 65535, so a save/load round trip moves values by at
/// most 1/(2*65535).
void save_pgm(const Image& image, const std::filesystem::path& path);

/// Box-average downsampling by an integer factor; width and height must be
/// divisible by it.
Image box_downsample(const Image& image, int factor);

}  // namespace seqc
