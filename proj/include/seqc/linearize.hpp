#pragma once

#include <memory>

#include <Eigen/Dense>

#include "seqc/grid.hpp"
#include "seqc/models.hpp"

namespace seqc {

/// Abstract linear map on images with an exact adjoint. Instances are
/// immutable after construction; concurrent apply calls are safe.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual Image apply(const Image& x) const = 0;
  virtual Image apply_adjoint(const Image& w) const = 0;
};

Eigen::VectorXd to_vector(const Image& x);
Image from_vector(int width, int height, const Eigen::VectorXd& v);

/// Wraps a linear ForwardModel (linear diffusion); apply is the model map
/// itself and the adjoint comes from the model's vjp.
class FixedModelOperator : public LinearOperator {
 public:
  explicit FixedModelOperator(ModelParams ld_params);
  Image apply(const Image& x) const override;
  Image apply_adjoint(const Image& w) const override;
  const ForwardModel& model() const { return model_; }

 private:
  ForwardModel model_;
};

/// Fréchet derivative of a nonlinear model at a fixed expansion point,
/// matrix-free via the stored forward trajectory.
class TaylorOperator : public LinearOperator {
 public:
  explicit TaylorOperator(
      std::shared_ptr<const ForwardModel::Linearization> lin);
  Image apply(const Image& v) const override;
  Image apply_adjoint(const Image& w) const override;

 private:
  std::shared_ptr<const ForwardModel::Linearization> lin_;
};

/// Explicit square matrix over flattened pixels. Test support.
class DenseMatrixOperator : public LinearOperator {
 public:
  DenseMatrixOperator(int width, int height, Eigen::MatrixXd matrix);
  Image apply(const Image& x) const override;
  Image apply_adjoint(const Image& w) const override;
  const Eigen::MatrixXd& matrix() const { return matrix_; }

 private:
  int width_, height_;
  Eigen::MatrixXd matrix_;
};

/// Affine map u -> offset + linear(u). The Taylor surrogate of A at x' is
/// offset = A(x') - J(x') x', linear = J(x'); a fixed approximation has a
/// zero offset.
struct AffineApprox {
  std::shared_ptr<const LinearOperator> linear;
  Image offset;  // empty means zero

  Image apply(const Image& x) const;
};

/// Linear-diffusion approximation used by the fixed correction sequence.
std::shared_ptr<const LinearOperator> fixed_approx(const ModelParams& ld_params);

/// First-order Taylor expansion of the model centered at x_k.
AffineApprox taylor_at(const ForwardModel& model, const Image& x_k);

/// The exact forward map as consumers of approximations see it: evaluation
/// plus a local affine linearization (for a linear map, the map itself).
class ExactModel {
 public:
  virtual ~ExactModel() = default;
  virtual Image evaluate(const Image& x) const = 0;
  virtual AffineApprox linearize_at(const Image& x) const = 0;
};

/// Diffusion-type forward model as an ExactModel; linearize_at is the Taylor
/// expansion via jvp/vjp.
class NonlinearExactModel final : public ExactModel {
 public:
  explicit NonlinearExactModel(ForwardModel model) : model_(std::move(model)) {}
  Image evaluate(const Image& x) const override { return model_.evaluate(x); }
  AffineApprox linearize_at(const Image& x) const override {
    return taylor_at(model_, x);
  }

 private:
  ForwardModel model_;
};

/// Linear operator as an ExactModel (it is its own Taylor expansion).
class LinearExactModel final : public ExactModel {
 public:
  explicit LinearExactModel(std::shared_ptr<const LinearOperator> op)
      : op_(std::move(op)) {}
  Image evaluate(const Image& x) const override { return op_->apply(x); }
  AffineApprox linearize_at(const Image&) const override {
    return AffineApprox{op_, Image{}};
  }

 private:
  std::shared_ptr<const LinearOperator> op_;
};

/// Approximation error eps(x) = A(x) - approx(x).
Image approx_error(const ForwardModel& model, const LinearOperator& approx,
                   const Image& x);
Image approx_error(const ExactModel& model, const LinearOperator& approx,
                   const Image& x);

/// Dense matrix of an arbitrary linear operator by probing basis vectors.
/// Test and small-problem support; refuses grids above 4096 pixels.
Eigen::MatrixXd densify(const LinearOperator& op, int width, int height);

}  // namespace seqc
