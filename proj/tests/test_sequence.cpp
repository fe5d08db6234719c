#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "seqc/noise.hpp"
#include "seqc/phantoms.hpp"
#include "seqc/sequence.hpp"
#include "test_util.hpp"

using namespace seqc;

TEST_SUITE_BEGIN("sequence");

namespace {

double spectral_norm(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

Image vec_image(int w, int h, const Eigen::VectorXd& v) {
  return from_vector(w, h, v);
}

}  // namespace

TEST_CASE("objective on the 2x2 hand case equals the TV value") {
  ForwardModel nld(ModelKind::NonlinearDiffusion, {});
  Image u(2, 2, std::vector<double>{0.0, 1.0, 0.0, 1.0});
  Image y = nld.evaluate(u);
  CHECK(objective(nld, y, 1.0, Fidelity::L2, u) == doctest::Approx(2.0));

  // Constant input: objective reduces to the data fidelity.
  Image c(6, 6, 0.3);
  Image yc = nld.evaluate(c) - Image(6, 6, 0.1);
  CHECK(objective(nld, yc, 1.0, Fidelity::L2, c) ==
        doctest::Approx(data_fidelity(nld, yc, Fidelity::L2, c)));
  CHECK(objective(nld, yc, 1.0, Fidelity::L1, c) ==
        doctest::Approx(data_fidelity(nld, yc, Fidelity::L1, c)));
}

TEST_CASE("fixed sequence: linear invertible operators converge to A^-1 y") {
  const int n = 2;
  Eigen::MatrixXd atilde(n, n), contraction(n, n);
  atilde << 2.0, 0.3, 0.1, 1.5;
  contraction << 0.25, 0.05, -0.10, 0.20;
  Eigen::MatrixXd a = atilde * (Eigen::MatrixXd::Identity(n, n) - contraction);
  REQUIRE(spectral_norm(Eigen::MatrixXd::Identity(n, n) -
                        atilde.inverse() * a) < 0.9);

  Eigen::VectorXd yv(n);
  yv << 1.0, -0.7;
  const Image y = vec_image(n, 1, yv);
  const Image x_star = vec_image(n, 1, a.inverse() * yv);

  LinearExactModel model(std::make_shared<DenseMatrixOperator>(n, 1, a));
  auto approx = std::make_shared<DenseMatrixOperator>(n, 1, atilde);

  SequenceConfig cfg;
  cfg.mode = SequenceMode::Fixed;
  cfg.reg = RegKind::Tikhonov;
  cfg.lambda = 1e-12;
  cfg.outer_max = 200;
  cfg.outer_tol = -1.0;
  cfg.x0_policy = X0Policy::Zero;
  SequenceResult res = run_fixed(model, approx, y, cfg);
  CHECK(norm_l2(res.reconstruction - x_star) < 1e-8);

  // Trace bookkeeping: one row per completed iteration plus the start.
  for (std::size_t i = 0; i < res.trace.rows.size(); ++i)
    CHECK(res.trace.rows[i].iter == static_cast<int>(i));
}

TEST_CASE("fixed sequence: Tikhonov instance converges to the closed form") {
  const int n = 3;
  Eigen::MatrixXd atilde(n, n), diff(n, n);
  atilde << 1.5, 0.2, 0.0, 0.1, 1.2, 0.3, 0.0, -0.2, 1.8;
  diff << 0.3, -0.2, 0.1, 0.2, 0.1, -0.3, -0.1, 0.2, 0.2;
  diff *= 0.4;
  Eigen::MatrixXd a = atilde + diff;
  const double lambda = 1.0;

  Eigen::MatrixXd t =
      (atilde.transpose() * atilde +
       lambda * Eigen::MatrixXd::Identity(n, n)).inverse() * atilde.transpose();
  REQUIRE(spectral_norm(t * diff) < 0.9);

  Eigen::VectorXd yv(n);
  yv << 0.8, -0.4, 1.1;
  Eigen::VectorXd x_star_v =
      (Eigen::MatrixXd::Identity(n, n) + t * diff).inverse() * (t * yv);

  LinearExactModel model(std::make_shared<DenseMatrixOperator>(n, 1, a));
  auto approx = std::make_shared<DenseMatrixOperator>(n, 1, atilde);

  SequenceConfig cfg;
  cfg.mode = SequenceMode::Fixed;
  cfg.reg = RegKind::Tikhonov;
  cfg.lambda = lambda;
  cfg.outer_max = 300;
  cfg.outer_tol = -1.0;
  cfg.x0_policy = X0Policy::Zero;
  SequenceResult res = run_fixed(model, approx, vec_image(n, 1, yv), cfg);
  CHECK(norm_l2(res.reconstruction - vec_image(n, 1, x_star_v)) < 1e-8);
}

TEST_CASE("fixed sequence with an exact approximation stalls immediately") {
  ForwardModel ld(ModelKind::LinearDiffusion, {});
  auto approx = fixed_approx({});
  Image y = add_gaussian_noise(make_phantom(12, 12, 5), 0.05, 3);

  std::vector<Image> iterates;
  SequenceConfig cfg;
  cfg.mode = SequenceMode::Fixed;
  cfg.lambda = 0.01;
  cfg.outer_max = 6;
  cfg.inner.tol = 1e-10;
  cfg.inner.max_iters = 20000;
  cfg.on_iterate = [&](int, const Image& x) { iterates.push_back(x); };
  SequenceResult res = run_fixed(ld, approx, y, cfg);

  REQUIRE(iterates.size() >= 2);
  CHECK(res.trace.rows.size() == 3);  // start + first solve + stalled repeat
  CHECK(test::rel_l2_diff(iterates[1], iterates[0]) < 1e-6);
}

TEST_CASE("damped sequence with delta 1 reproduces the undamped run exactly") {
  ForwardModel nld(ModelKind::NonlinearDiffusion, {});
  auto approx = fixed_approx({});
  Image y = add_gaussian_noise(make_phantom(10, 10, 6), 0.03, 4);

  std::vector<Image> a_iter, b_iter;
  SequenceConfig cfg;
  cfg.mode = SequenceMode::Fixed;
  cfg.lambda = 0.02;
  cfg.outer_max = 4;
  cfg.outer_tol = 0.0;
  cfg.inner.max_iters = 300;
  cfg.on_iterate = [&](int, const Image& x) { a_iter.push_back(x); };
  run_fixed(nld, approx, y, cfg);

  cfg.damping = Damping::constant(1.0);
  cfg.on_iterate = [&](int, const Image& x) { b_iter.push_back(x); };
  run_damped(nld, approx, y, cfg);

  REQUIRE(a_iter.size() == b_iter.size());
  for (std::size_t i = 0; i < a_iter.size(); ++i)
    CHECK(test::max_abs_diff(a_iter[i], b_iter[i]) == 0.0);
}

TEST_CASE("vanishing damping freezes the iterate") {
  ForwardModel nld(ModelKind::NonlinearDiffusion, {});
  auto approx = fixed_approx({});
  Image y = add_gaussian_noise(make_phantom(10, 10, 7), 0.03, 5);

  SequenceConfig cfg;
  cfg.mode = SequenceMode::Fixed;
  cfg.damping = Damping::constant(1e-9);
  cfg.lambda = 0.02;
  cfg.outer_max = 1;
  SequenceResult res = run_damped(nld, approx, y, cfg);
  CHECK(test::max_abs_diff(res.reconstruction, y) < 1e-6);
}

TEST_CASE("damping preserves the fixed point of a converged run") {
  // The undamped fixed sequence oscillates on this instance; its damped
  // version converges and must sit still when restarted at the limit.
  ForwardModel nld(ModelKind::NonlinearDiffusion, {});
  auto approx = fixed_approx({});
  Image y = add_gaussian_noise(make_phantom(12, 12, 8), 0.03, 6);

  SequenceConfig cfg;
  cfg.mode = SequenceMode::Fixed;
  cfg.damping = Damping::constant(0.5);
  cfg.lambda = 0.01;
  cfg.outer_max = 80;
  cfg.outer_tol = -1.0;
  cfg.inner.tol = 1e-10;
  cfg.inner.max_iters = 30000;
  Image x_star = run_damped(nld, approx, y, cfg).reconstruction;

  SequenceConfig one = cfg;
  one.outer_max = 1;
  one.x0_policy = X0Policy::Given;
  one.x0 = x_star;
  SequenceResult res = run_damped(nld, approx, y, one);
  CHECK(norm_l2(res.reconstruction - x_star) <= 1e-5);
}

TEST_CASE("adaptive sequence on a linear model matches the fixed sequence") {
  ForwardModel ld(ModelKind::LinearDiffusion, {});
  auto approx = fixed_approx({});
  Image y = add_gaussian_noise(make_phantom(10, 10, 9), 0.03, 7);

  SequenceConfig cfg;
  cfg.lambda = 0.02;
  cfg.outer_max = 5;
  cfg.outer_tol = 0.0;
  cfg.inner.max_iters = 2000;
  cfg.inner.tol = 1e-9;

  cfg.mode = SequenceMode::Fixed;
  Image xf = run_fixed(ld, approx, y, cfg).reconstruction;
  cfg.mode = SequenceMode::Adaptive;
  Image xa = run_adaptive(ld, y, cfg).reconstruction;
  CHECK(test::rel_l2_diff(xa, xf) < 1e-8);
}

TEST_CASE("one adaptive step equals the Gauss-Newton update") {
  ForwardModel nld(ModelKind::NonlinearDiffusion, {});
  const int n = 8;
  Image x0 = make_phantom(n, n, 11);
  Image y = add_gaussian_noise(nld.evaluate(make_phantom(n, n, 12)), 0.03, 8);
  const double lambda = 0.1;

  Eigen::MatrixXd jac = dense_jacobian(nld, x0);
  Eigen::VectorXd x0v = to_vector(x0);
  Eigen::VectorXd resid = to_vector(y) - to_vector(nld.evaluate(x0));
  Eigen::MatrixXd h = jac.transpose() * jac +
                      lambda * Eigen::MatrixXd::Identity(n * n, n * n);
  Eigen::VectorXd gn_dir =
      h.ldlt().solve(jac.transpose() * resid - lambda * x0v);

  for (double delta : {0.3, 1.0}) {
    SequenceConfig cfg;
    cfg.mode = SequenceMode::Adaptive;
    cfg.reg = RegKind::Tikhonov;
    cfg.lambda = lambda;
    cfg.outer_max = 1;
    cfg.damping = Damping::constant(delta);
    cfg.x0_policy = X0Policy::Given;
    cfg.x0 = x0;
    Image x1 = run_adaptive(nld, y, cfg).reconstruction;

    Image x_gn = vec_image(n, n, x0v + delta * gn_dir);
    CHECK(test::rel_l2_diff(x1, x_gn) < 1e-6);
  }
}

TEST_CASE("a first-order stationary point is a fixed point of the adaptive step") {
  ForwardModel nld(ModelKind::NonlinearDiffusion, {});
  const int n = 8;
  const double lambda = 0.1;
  Image x_star = make_phantom(n, n, 13);

  // Choose y so that J*(y - A(x*)) = lambda x*.
  Eigen::MatrixXd jac = dense_jacobian(nld, x_star);
  Eigen::VectorXd zeta =
      jac.transpose().colPivHouseholderQr().solve(lambda * to_vector(x_star));
  Image y = vec_image(n, n, to_vector(nld.evaluate(x_star)) + zeta);

  SequenceConfig cfg;
  cfg.mode = SequenceMode::Adaptive;
  cfg.reg = RegKind::Tikhonov;
  cfg.lambda = lambda;
  cfg.outer_max = 1;
  cfg.x0_policy = X0Policy::Given;
  cfg.x0 = x_star;
  Image x1 = run_adaptive(nld, y, cfg).reconstruction;
  CHECK(norm_l2(x1 - x_star) <= 1e-8);
}

TEST_CASE("adaptive steps are descent directions in the smooth case") {
  ForwardModel nld(ModelKind::NonlinearDiffusion, {});
  const int n = 8;
  const double lambda = 0.05;
  Image y = add_gaussian_noise(nld.evaluate(make_phantom(n, n, 14)), 0.03, 9);

  std::vector<Image> iterates;
  SequenceConfig cfg;
  cfg.mode = SequenceMode::Adaptive;
  cfg.reg = RegKind::Tikhonov;
  cfg.lambda = lambda;
  cfg.outer_max = 5;
  cfg.outer_tol = 0.0;
  cfg.damping = Damping::constant(0.7);
  cfg.on_iterate = [&](int, const Image& x) { iterates.push_back(x); };
  cfg.x0_policy = X0Policy::Given;
  cfg.x0 = y;
  run_adaptive(nld, y, cfg);

  Image prev = y;
  for (const Image& next : iterates) {
    Image grad_l = nld.vjp(prev, nld.evaluate(prev) - y);
    add_scaled(grad_l, lambda, prev);
    Image step = next - prev;
    const double dot = inner(grad_l, step);
    CHECK(dot <= 1e-6 * norm_l2(grad_l) * norm_l2(step));
    prev = next;
  }
}

TEST_CASE("adaptive line search never increases the TV objective") {
  ForwardModel nld(ModelKind::NonlinearDiffusion, {});
  Image y = add_gaussian_noise(nld.evaluate(make_phantom(16, 16, 15)), 0.03, 10);

  SequenceConfig cfg;
  cfg.mode = SequenceMode::Adaptive;
  cfg.damping = Damping::line_search(11);
  cfg.lambda = 0.005;
  cfg.outer_max = 8;
  cfg.outer_tol = 0.0;
  cfg.inner.max_iters = 400;
  SequenceResult res = run_adaptive(nld, y, cfg);
  for (std::size_t i = 1; i < res.trace.rows.size(); ++i)
    CHECK(res.trace.rows[i].objective <=
          res.trace.rows[i - 1].objective + 1e-9);
}

TEST_CASE("line search on a monotone segment picks the far end") {
  ForwardModel ld(ModelKind::LinearDiffusion, {});
  Image x(4, 4, 1.0), s(4, 4, 0.5), y(4, 4, 0.5);
  CHECK(line_search(ld, y, 1.0, Fidelity::L2, x, s, 11) == 1.0);
}

TEST_CASE("line search finds an interior quadratic minimum on the grid") {
  ForwardModel ld(ModelKind::LinearDiffusion, {});
  Image x(4, 4, 0.0), s(4, 4, 1.0), y(4, 4, 0.5);
  CHECK(line_search(ld, y, 1.0, Fidelity::L2, x, s, 11) == 0.5);
}

TEST_CASE("line search never does worse than staying put") {
  ForwardModel nld(ModelKind::NonlinearDiffusion, {});
  std::mt19937_64 rng(51);
  for (int t = 0; t < 5; ++t) {
    Image x = test::random_image(8, 8, rng);
    Image s = test::random_image(8, 8, rng);
    Image y = test::random_image(8, 8, rng);
    const double delta = line_search(nld, y, 0.1, Fidelity::L1, x, s, 7);
    Image chosen = delta * s + (1.0 - delta) * x;
    CHECK(objective(nld, y, 0.1, Fidelity::L1, chosen) <=
          objective(nld, y, 0.1, Fidelity::L1, x) + 1e-12);
  }
}

TEST_CASE("configuration validation") {
  SequenceConfig cfg;
  cfg.outer_max = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.damping = Damping::constant(1.5);
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.reg = RegKind::Tikhonov;
  cfg.fidelity = Fidelity::L1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_SUITE_END();
