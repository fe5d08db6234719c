#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "seqc/linearize.hpp"
#include "test_util.hpp"

using namespace seqc;

TEST_SUITE_BEGIN("linearize");

namespace {

void check_linearity_and_adjoint(const LinearOperator& op, int w, int h,
                                 std::mt19937_64& rng) {
  Image a = test::random_image(w, h, rng, -1.0, 1.0);
  Image b = test::random_image(w, h, rng, -1.0, 1.0);
  const double alpha = 0.7, beta = -1.3;

  Image lhs = op.apply(alpha * a + beta * b);
  Image rhs = alpha * op.apply(a) + beta * op.apply(b);
  double scale = std::max(norm_l2(lhs), 1e-30);
  CHECK(norm_l2(lhs - rhs) / scale <= 1e-10);

  Image v = test::random_image(w, h, rng, -1.0, 1.0);
  Image u = test::random_image(w, h, rng, -1.0, 1.0);
  const double p = inner(op.apply(v), u);
  const double q = inner(v, op.apply_adjoint(u));
  CHECK(std::abs(p - q) <= 1e-10 * std::max({std::abs(p), std::abs(q), 1e-30}));
}

}  // namespace

TEST_CASE("fixed approximation matches the linear-diffusion model") {
  auto op = fixed_approx({});
  ForwardModel ld(ModelKind::LinearDiffusion, {});
  std::mt19937_64 rng(31);

  Image zero(9, 9, 0.0);
  CHECK(test::max_abs_diff(op->apply(zero), zero) == 0.0);

  Image x = test::random_image(9, 9, rng);
  CHECK(test::max_abs_diff(op->apply(x), ld.evaluate(x)) == 0.0);

  check_linearity_and_adjoint(*op, 9, 9, rng);
}

TEST_CASE("Taylor approximation is exact at its expansion point") {
  std::mt19937_64 rng(32);
  for (ModelKind kind :
       {ModelKind::NonlinearDiffusion, ModelKind::CurvatureFlow}) {
    ForwardModel model(kind, {});
    Image xk = test::random_image(10, 10, rng);
    AffineApprox approx = taylor_at(model, xk);
    Image at_center = approx.apply(xk);
    Image truth = model.evaluate(xk);
    CHECK(test::max_abs_diff(at_center, truth) <= 1e-10);
    check_linearity_and_adjoint(*approx.linear, 10, 10, rng);
  }
}

TEST_CASE("Taylor expansion of a linear model is the model everywhere") {
  ForwardModel ld(ModelKind::LinearDiffusion, {});
  std::mt19937_64 rng(33);
  Image xk = test::random_image(8, 8, rng);
  AffineApprox approx = taylor_at(ld, xk);
  for (int t = 0; t < 5; ++t) {
    Image x = test::random_image(8, 8, rng, -0.5, 1.5);
    CHECK(test::max_abs_diff(approx.apply(x), ld.evaluate(x)) <= 1e-12);
  }
}

TEST_CASE("Taylor error shrinks quadratically in the step") {
  ForwardModel nld(ModelKind::NonlinearDiffusion, {});
  std::mt19937_64 rng(34);
  Image xk = test::random_image(12, 12, rng);
  Image v = test::random_image(12, 12, rng, -1.0, 1.0);
  AffineApprox approx = taylor_at(nld, xk);

  auto taylor_gap = [&](double step) {
    Image x = xk;
    add_scaled(x, step, v);
    return norm_l2(nld.evaluate(x) - approx.apply(x));
  };
  const double e1 = taylor_gap(1e-2);
  const double e2 = taylor_gap(5e-3);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("approximation error vanishes when the approximation is the model") {
  ForwardModel ld(ModelKind::LinearDiffusion, {});
  auto op = fixed_approx({});
  std::mt19937_64 rng(35);
  Image x = test::random_image(8, 8, rng);
  Image eps = approx_error(ld, *op, x);
  CHECK(norm_l2(eps) <= 1e-14);
}

TEST_CASE("approximation error at zero is zero for all models") {
  auto op = fixed_approx({});
  Image zero(8, 8, 0.0);
  for (ModelKind kind : {ModelKind::LinearDiffusion,
                         ModelKind::NonlinearDiffusion,
                         ModelKind::CurvatureFlow}) {
    ForwardModel model(kind, {});
    CHECK(norm_l2(approx_error(model, *op, zero)) <= 1e-14);
  }
}

TEST_CASE("step-edge error energy concentrates at the edge") {
  const int w = 16, h = 16, c = 8;  // interface between columns 7 and 8
  Image x(w, h, 0.0);
  for (int i = 0; i < h; ++i)
    for (int j = c; j < w; ++j) x(i, j) = 1.0;
  ForwardModel nld(ModelKind::NonlinearDiffusion, {});
  auto ld = fixed_approx({});
  Image eps = approx_error(nld, *ld, x);
  CHECK(norm_l2(eps) > 1e-4);
  double total = 0.0, near = 0.0;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const double e2 = eps(i, j) * eps(i, j);
      total += e2;
      if (std::abs(j + 0.5 - c) <= 3.0) near += e2;
    }
  CHECK(near / total >= 0.9);
}

TEST_CASE("dense matrix operator") {
  std::mt19937_64 rng(36);
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(12, 12);
  DenseMatrixOperator op(4, 3, m);
  check_linearity_and_adjoint(op, 4, 3, rng);

  Eigen::MatrixXd back = densify(op, 4, 3);
  CHECK((back - m).cwiseAbs().maxCoeff() <= 1e-14);

  CHECK_THROWS_AS(DenseMatrixOperator(4, 4, m), std::invalid_argument);
  CHECK_THROWS_AS(op.apply(Image(3, 4, 0.0)), std::invalid_argument);
}

TEST_CASE("surrogate gradient at the expansion point matches the objective") {
  // Smooth case: L(u) = 1/2 ||A(u)-y||^2 + lambda/2 ||u||^2; the surrogate
  // gradient at x_k is J*(A(x_k)-y) + lambda x_k. Checked directionally
  // against central differences of L.
  ForwardModel nld(ModelKind::NonlinearDiffusion, {});
  std::mt19937_64 rng(37);
  const double lambda = 0.05;
  Image x = test::random_image(8, 8, rng);
  Image y = test::random_image(8, 8, rng);

  auto lin = nld.linearize(x);
  Image grad_formula = lin->vjp(lin->value() - y);
  add_scaled(grad_formula, lambda, x);

  auto objective = [&](const Image& u) {
    Image r = nld.evaluate(u) - y;
    return 0.5 * inner(r, r) + 0.5 * lambda * inner(u, u);
  };
  for (int t = 0; t < 3; ++t) {
    Image v = test::random_image(8, 8, rng, -1.0, 1.0);
    const double h = 1e-5;
    Image xp = x, xm = x;
    add_scaled(xp, h, v);
    add_scaled(xm, -h, v);
    const double fd = (objective(xp) - objective(xm)) / (2.0 * h);
    const double an = inner(grad_formula, v);
    CHECK(std::abs(fd - an) <= 1e-4 * std::max(std::abs(an), 1e-12));
  }
}

TEST_SUITE_END();
