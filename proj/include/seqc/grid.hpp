#pragma once

#include <cstddef>
#include <vector>

namespace seqc {

/// Row-major 2D grayscale grid of 64-bit reals. Holds the unknown, the data
/// and every solver iterate. Nominal intensity range is [0,1]; iterates may
/// leave it. Grid spacing is 1.
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0);
  Image(int width, int height, std::vector<double> values);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }

  double operator()(int row, int col) const { return values_[idx(row, col)]; }
  double& operator()(int row, int col) { return values_[idx(row, col)]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }
  bool all_finite() const;

  double min_value() const;
  double max_value() const;
  double sum() const;

  Image& operator+=(const Image& other);
  Image& operator-=(const Image& other);
  Image& operator*=(double s);

 private:
  std::size_t idx(int row, int col) const {
    return static_cast<std::size_t>(row) * width_ + col;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

Image operator+(Image a, const Image& b);
Image operator-(Image a, const Image& b);
Image operator*(double s, Image a);

/// y += alpha * x
void add_scaled(Image& y, double alpha, const Image& x);

/// Per-pixel 2-vector grid; holds image gradients and the TV dual variable.
/// Components are stored on the same row-major lattice as Image; the x
/// component at (i,j) sits on the face between columns j and j+1 (zero in the
/// last column), the y component between rows i and i+1.
struct VectorField {
  int width = 0;
  int height = 0;
  std::vector<double> dx, dy;

  VectorField() = default;
  VectorField(int width, int height);

  std::size_t size() const { return dx.size(); }
  bool same_shape(const VectorField& other) const {
    return width == other.width && height == other.height;
  }
  bool all_finite() const;
};

/// Forward differences with replicate (Neumann) boundary:
/// dx(i,j) = u(i,j+1) - u(i,j) for j < width-1, else 0; dy analogous in rows.
VectorField grad(const Image& u);

/// Exact negative adjoint of grad: <grad(u), q> = -<u, div(q)> for all u, q.
Image div(const VectorField& q);

double inner(const Image& a, const Image& b);
double inner(const VectorField& a, const VectorField& b);
double norm_l2(const Image& a);
double norm_l2(const VectorField& a);
double norm_l1(const Image& a);

/// Pointwise sqrt(dx^2 + dy^2).
Image field_magnitude(const VectorField& q);

/// Isotropic total variation: sum over pixels of the gradient magnitude.
double total_variation(const Image& u);

}  // namespace seqc
