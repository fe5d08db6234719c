#include "seqc/phantoms.hpp"

#include <algorithm>
#include <cmath>

#include "seqc/rng.hpp"

namespace seqc {

namespace {

double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

}  // namespace

Image make_phantom(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image img(width, height, uniform_in(rng, 0.1, 0.4));

  const int shapes = 3 + static_cast<int>(uniform_below(rng, 4));  // 3..6
  for (int s = 0; s < shapes; ++s) {
    const std::uint64_t kind = uniform_below(rng, 3);
    const double value = uniform_in(rng, 0.0, 1.0);
    if (kind == 0) {
      // disk
      const double cx = uniform_in(rng, 0.15, 0.85) * width;
      const double cy = uniform_in(rng, 0.15, 0.85) * height;
      const double r = uniform_in(rng, 0.08, 0.3) * std::min(width, height);
      for (int i = 0; i < height; ++i)
        for (int j = 0; j < width; ++j) {
          const double dx = j + 0.5 - cx, dy = i + 0.5 - cy;
          if (dx * dx + dy * dy <= r * r) img(i, j) = value;
        }
    } else if (kind == 1) {
      // axis-aligned rectangle
      const int x0 = static_cast<int>(uniform_in(rng, 0.0, 0.7) * width);
      const int y0 = static_cast<int>(uniform_in(rng, 0.0, 0.7) * height);
      const int x1 = std::min<int>(width, x0 + 2 + static_cast<int>(uniform_below(
                                              rng, std::max(1, width / 2))));
      const int y1 = std::min<int>(height, y0 + 2 + static_cast<int>(uniform_below(
                                               rng, std::max(1, height / 2))));
      for (int i = y0; i < y1; ++i)
        for (int j = x0; j < x1; ++j) img(i, j) = value;
    } else {
      // ramp patch: linear gradient across a horizontal band
      const int y0 = static_cast<int>(uniform_in(rng, 0.0, 0.6) * height);
      const int y1 = std::min<int>(height, y0 + 3 + static_cast<int>(uniform_below(
                                               rng, std::max(1, height / 3))));
      const double v0 = uniform_in(rng, 0.0, 1.0);
      const double v1 = uniform_in(rng, 0.0, 1.0);
      for (int i = y0; i < y1; ++i)
        for (int j = 0; j < width; ++j)
          img(i, j) = v0 + (v1 - v0) * (static_cast<double>(j) / (width - 1));
    }
  }

  for (std::size_t i = 0; i < img.size(); ++i)
    img[i] = std::clamp(img[i], 0.0, 1.0);
  return img;
}

std::vector<Image> make_phantoms(int count, int width, int height,
                                 std::uint64_t base_seed,
                                 std::uint64_t index_offset) {
  std::vector<Image> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i)
    out.push_back(make_phantom(
        width, height,
        derive_seed(base_seed, kSeedTagPhantom, index_offset + i)));
  return out;
}

}  // namespace seqc
