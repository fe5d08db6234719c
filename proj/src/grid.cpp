#include "seqc/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace seqc {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Image::Image(int width, int height, double fill)
    : width_(width), height_(height) {
  require(width > 0 && height > 0, "Image: dimensions must be positive");
  values_.assign(static_cast<std::size_t>(width) * height, fill);
}

Image::Image(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  require(width > 0 && height > 0, "Image: dimensions must be positive");
  require(values_.size() == static_cast<std::size_t>(width) * height,
          "Image: value count does not match dimensions");
}

bool Image::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Image::min_value() const {
  double m = values_.empty() ? 0.0 : values_[0];
  for (double v : values_) m = std::min(m, v);
  return m;
}

double Image::max_value() const {
  double m = values_.empty() ? 0.0 : values_[0];
  for (double v : values_) m = std::max(m, v);
  return m;
}

double Image::sum() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

Image& Image::operator+=(const Image& other) {
  require(same_shape(other), "Image +=: shape mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other[i];
  return *this;
}

Image& Image::operator-=(const Image& other) {
  require(same_shape(other), "Image -=: shape mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other[i];
  return *this;
}

Image& Image::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Image operator+(Image a, const Image& b) {
  a += b;
  return a;
}

Image operator-(Image a, const Image& b) {
  a -= b;
  return a;
}

Image operator*(double s, Image a) {
  a *= s;
  return a;
}

void add_scaled(Image& y, double alpha, const Image& x) {
  require(y.same_shape(x), "add_scaled: shape mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

VectorField::VectorField(int width, int height)
    : width(width), height(height) {
  require(width > 0 && height > 0, "VectorField: dimensions must be positive");
  dx.assign(static_cast<std::size_t>(width) * height, 0.0);
  dy.assign(static_cast<std::size_t>(width) * height, 0.0);
}

bool VectorField::all_finite() const {
  for (double v : dx)
    if (!std::isfinite(v)) return false;
  for (double v : dy)
    if (!std::isfinite(v)) return false;
  return true;
}

VectorField grad(const Image& u) {
  const int w = u.width(), h = u.height();
  VectorField g(w, h);
  for (int i = 0; i < h; ++i) {
    const std::size_t row = static_cast<std::size_t>(i) * w;
    for (int j = 0; j < w - 1; ++j)
      g.dx[row + j] = u[row + j + 1] - u[row + j];
    if (i < h - 1)
      for (int j = 0; j < w; ++j) g.dy[row + j] = u[row + w + j] - u[row + j];
  }
  return g;
}

Image div(const VectorField& q) {
  const int w = q.width, h = q.height;
  Image out(w, h);
  for (int i = 0; i < h; ++i) {
    const std::size_t row = static_cast<std::size_t>(i) * w;
    for (int j = 0; j < w; ++j) {
      double d = 0.0;
      if (j < w - 1) d += q.dx[row + j];
      if (j > 0) d -= q.dx[row + j - 1];
      if (i < h - 1) d += q.dy[row + j];
      if (i > 0) d -= q.dy[row - w + j];
      out[row + j] = d;
    }
  }
  return out;
}

double inner(const Image& a, const Image& b) {
  require(a.same_shape(b), "inner: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inner(const VectorField& a, const VectorField& b) {
  require(a.same_shape(b), "inner: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a.dx[i] * b.dx[i] + a.dy[i] * b.dy[i];
  return s;
}

double norm_l2(const Image& a) { return std::sqrt(inner(a, a)); }

double norm_l2(const VectorField& a) { return std::sqrt(inner(a, a)); }

double norm_l1(const Image& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i]);
  return s;
}

Image field_magnitude(const VectorField& q) {
  Image out(q.width, q.height);
  for (std::size_t i = 0; i < q.size(); ++i)
    out[i] = std::hypot(q.dx[i], q.dy[i]);
  return out;
}

double total_variation(const Image& u) {
  VectorField g = grad(u);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    s += std::sqrt(g.dx[i] * g.dx[i] + g.dy[i] * g.dy[i]);
  return s;
}

}  // namespace seqc
