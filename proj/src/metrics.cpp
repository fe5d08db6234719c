#include "seqc/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace seqc {

double psnr(const Image& x, const Image& ref, double peak) {
  if (!x.same_shape(ref)) throw std::invalid_argument("psnr: shape mismatch");
  double mse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - ref[i];
    mse += d * d;
  }
  mse /= static_cast<double>(x.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

constexpr int kWindow = 11;
constexpr int kRadius = kWindow / 2;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> taps{};
  double sum = 0.0;
  for (int k = -kRadius; k <= kRadius; ++k) {
    const double v = std::exp(-0.5 * k * k / (kSigma * kSigma));
    taps[k + kRadius] = v;
    sum += v;
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Separable Gaussian filter; output is exact wherever the window fits
// inside the image (the only region ssim reads).
Image gaussian_filter(const Image& x) {
  static const std::array<double, kWindow> taps = gaussian_taps();
  const int w = x.width(), h = x.height();
  Image tmp(w, h), out(w, h);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      double acc = 0.0;
      for (int k = -kRadius; k <= kRadius; ++k) {
        const int jj = j + k;
        if (jj >= 0 && jj < w) acc += taps[k + kRadius] * x(i, jj);
      }
      tmp(i, j) = acc;
    }
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      double acc = 0.0;
      for (int k = -kRadius; k <= kRadius; ++k) {
        const int ii = i + k;
        if (ii >= 0 && ii < h) acc += taps[k + kRadius] * tmp(ii, j);
      }
      out(i, j) = acc;
    }
  return out;
}

}  // namespace

double ssim(const Image& x, const Image& ref) {
  if (!x.same_shape(ref)) throw std::invalid_argument("ssim: shape mismatch");
  if (x.width() < kWindow || x.height() < kWindow)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");

  Image xx(x.width(), x.height()), yy(x.width(), x.height()),
      xy(x.width(), x.height());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = ref[i] * ref[i];
    xy[i] = x[i] * ref[i];
  }
  const Image mx = gaussian_filter(x);
  const Image my = gaussian_filter(ref);
  const Image mxx = gaussian_filter(xx);
  const Image myy = gaussian_filter(yy);
  const Image mxy = gaussian_filter(xy);

  const double c1 = kK1 * kK1;  // (K1 * L)^2 with L = 1
  const double c2 = kK2 * kK2;

  double acc = 0.0;
  std::size_t count = 0;
  for (int i = kRadius; i < x.height() - kRadius; ++i)
    for (int j = kRadius; j < x.width() - kRadius; ++j) {
      const double ux = mx(i, j), uy = my(i, j);
      const double vx = mxx(i, j) - ux * ux;
      const double vy = myy(i, j) - uy * uy;
      const double cxy = mxy(i, j) - ux * uy;
      const double num = (2.0 * ux * uy + c1) * (2.0 * cxy + c2);
      const double den = (ux * ux + uy * uy + c1) * (vx + vy + c2);
      acc += num / den;
      ++count;
    }
  return acc / static_cast<double>(count);
}

std::vector<ErrorPairRow> error_pair_samples(
    const ForwardModel& model, const LinearOperator& approx,
    const std::vector<Image>& samples,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  if (samples.size() < 2)
    throw std::invalid_argument("error_pair_samples: need at least 2 samples");
  std::vector<ErrorPairRow> rows;
  rows.reserve(samples.size() * pairs.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const Image eps = approx_error(model, approx, samples[s]);
    for (const auto& [a, b] : pairs) {
      if (a >= eps.size() || b >= eps.size())
        throw std::invalid_argument("error_pair_samples: pixel index out of range");
      rows.push_back({s, a, b, eps[a], eps[b]});
    }
  }
  return rows;
}

}  // namespace seqc
