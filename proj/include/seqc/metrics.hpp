#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "seqc/grid.hpp"
#include "seqc/linearize.hpp"
#include "seqc/models.hpp"

namespace seqc {

/// Peak signal-to-noise ratio, 10 log10(peak^2 / MSE). Identical images
/// return +infinity; report writers cap that at 99 dB.
double psnr(const Image& x, const Image& ref, double peak = 1.0);

inline constexpr double kPsnrCap = 99.0;

/// Mean local structural similarity with an 11x11 Gaussian window
/// (sigma 1.5), K1 = 0.01, K2 = 0.03, dynamic range 1. Averages over pixels
/// whose window lies fully inside the image; both dimensions must be >= 11.
double ssim(const Image& x, const Image& ref);

struct ErrorPairRow {
  std::size_t sample_index;
  std::size_t pixel_a, pixel_b;
  double eps_a, eps_b;
};

/// Per-sample approximation-error values at fixed pixel pairs, for external
/// scatter plotting of the error distribution.
std::vector<ErrorPairRow> error_pair_samples(
    const ForwardModel& model, const LinearOperator& approx,
    const std::vector<Image>& samples,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

}  // namespace seqc
