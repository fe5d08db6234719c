#include "seqc/linearize.hpp"

#include <stdexcept>
#include <utility>

namespace seqc {

Eigen::VectorXd to_vector(const Image& x) {
  return Eigen::Map<const Eigen::VectorXd>(x.values().data(), x.size());
}

Image from_vector(int width, int height, const Eigen::VectorXd& v) {
  if (v.size() != static_cast<Eigen::Index>(width) * height)
    throw std::invalid_argument("from_vector: size mismatch");
  return Image(width, height,
               std::vector<double>(v.data(), v.data() + v.size()));
}

FixedModelOperator::FixedModelOperator(ModelParams ld_params)
    : model_(ModelKind::LinearDiffusion, ld_params) {}

Image FixedModelOperator::apply(const Image& x) const {
  return model_.evaluate(x);
}

Image FixedModelOperator::apply_adjoint(const Image& w) const {
  return model_.vjp(Image(w.width(), w.height(), 0.0), w);
}

TaylorOperator::TaylorOperator(
    std::shared_ptr<const ForwardModel::Linearization> lin)
    : lin_(std::move(lin)) {
  if (!lin_) throw std::invalid_argument("TaylorOperator: null linearization");
}

Image TaylorOperator::apply(const Image& v) const { return lin_->jvp(v); }

Image TaylorOperator::apply_adjoint(const Image& w) const {
  return lin_->vjp(w);
}

DenseMatrixOperator::DenseMatrixOperator(int width, int height,
                                         Eigen::MatrixXd matrix)
    : width_(width), height_(height), matrix_(std::move(matrix)) {
  const Eigen::Index n = static_cast<Eigen::Index>(width) * height;
  if (matrix_.rows() != n || matrix_.cols() != n)
    throw std::invalid_argument("DenseMatrixOperator: matrix/grid mismatch");
}

Image DenseMatrixOperator::apply(const Image& x) const {
  if (x.width() != width_ || x.height() != height_)
    throw std::invalid_argument("DenseMatrixOperator::apply: shape mismatch");
  return from_vector(width_, height_, matrix_ * to_vector(x));
}

Image DenseMatrixOperator::apply_adjoint(const Image& w) const {
  if (w.width() != width_ || w.height() != height_)
    throw std::invalid_argument(
        "DenseMatrixOperator::apply_adjoint: shape mismatch");
  return from_vector(width_, height_, matrix_.transpose() * to_vector(w));
}

Image AffineApprox::apply(const Image& x) const {
  Image out = linear->apply(x);
  if (offset.size() > 0) out += offset;
  return out;
}

std::shared_ptr<const LinearOperator> fixed_approx(
    const ModelParams& ld_params) {
  return std::make_shared<FixedModelOperator>(ld_params);
}

AffineApprox taylor_at(const ForwardModel& model, const Image& x_k) {
  auto lin = model.linearize(x_k);
  auto op = std::make_shared<TaylorOperator>(lin);
  Image offset = lin->value() - op->apply(x_k);
  return AffineApprox{std::move(op), std::move(offset)};
}

Image approx_error(const ForwardModel& model, const LinearOperator& approx,
                   const Image& x) {
  return model.evaluate(x) - approx.apply(x);
}

Image approx_error(const ExactModel& model, const LinearOperator& approx,
                   const Image& x) {
  return model.evaluate(x) - approx.apply(x);
}

Eigen::MatrixXd densify(const LinearOperator& op, int width, int height) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (n > 4096)
    throw std::invalid_argument("densify: grid too large (limit 4096 pixels)");
  Eigen::MatrixXd mat(n, n);
  Image basis(width, height, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    basis[k] = 1.0;
    Image col = op.apply(basis);
    for (std::size_t i = 0; i < n; ++i) mat(i, k) = col[i];
    basis[k] = 0.0;
  }
  return mat;
}

}  // namespace seqc
