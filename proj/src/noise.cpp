#include "seqc/noise.hpp"

#include <numeric>
#include <stdexcept>
#include <vector>

#include "seqc/rng.hpp"

namespace seqc {

Image add_gaussian_noise(const Image& x, double level, std::uint64_t seed) {
  if (!(level >= 0.0 && level < 1.0))
    throw std::invalid_argument("add_gaussian_noise: level must be in [0, 1)");
  Image out = x;
  if (level == 0.0) return out;
  const double sigma = level * (x.max_value() - x.min_value());
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] += sigma * standard_normal(rng);
  return out;
}

Image add_impulse_noise(const Image& x, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0))
    throw std::invalid_argument("add_impulse_noise: fraction must be in [0, 1)");
  Image out = x;
  const std::size_t n = x.size();
  const std::size_t count = static_cast<std::size_t>(fraction * n);
  if (count == 0) return out;

  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first `count` entries are a uniform draw
  // without replacement.
  std::vector<std::uint32_t> indices(n);
  std::iota(indices.begin(), indices.end(), 0u);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + uniform_below(rng, n - i);
    std::swap(indices[i], indices[j]);
  }
  for (std::size_t i = 0; i < count; ++i)
    out[indices[i]] = (rng() >> 63) ? 1.0 : 0.0;
  return out;
}

}  // namespace seqc
