#include "seqc/sequence.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace seqc {

namespace {

double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

double regularizer_value(RegKind reg, const Image& u) {
  switch (reg) {
    case RegKind::Tv:
      return total_variation(u);
    case RegKind::Tikhonov:
      return 0.5 * inner(u, u);
  }
  return 0.0;
}

// Exact minimizer of 1/2 ||M u - b||^2 + lambda/2 ||u||^2.
struct DenseTikhonovSolver {
  Eigen::MatrixXd m;
  Eigen::LLT<Eigen::MatrixXd> llt;

  DenseTikhonovSolver(Eigen::MatrixXd matrix, double lambda)
      : m(std::move(matrix)) {
    Eigen::MatrixXd normal = m.transpose() * m;
    normal.diagonal().array() += lambda;
    llt.compute(normal);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("dense inner solve: factorization failed");
  }

  Image solve(const Image& b) const {
    Eigen::VectorXd rhs = m.transpose() * to_vector(b);
    return from_vector(b.width(), b.height(), llt.solve(rhs));
  }
};

}  // namespace

void SequenceConfig::validate() const {
  if (outer_max < 1)
    throw std::invalid_argument("SequenceConfig: outer_max must be >= 1");
  if (!(lambda > 0.0))
    throw std::invalid_argument("SequenceConfig: lambda must be > 0");
  if (damping.kind == Damping::Kind::Constant &&
      !(damping.delta > 0.0 && damping.delta <= 1.0))
    throw std::invalid_argument("SequenceConfig: damping delta must be in (0,1]");
  if (damping.kind == Damping::Kind::LineSearch && damping.grid_size < 2)
    throw std::invalid_argument("SequenceConfig: line-search grid needs >= 2 points");
  if (reg == RegKind::Tikhonov && fidelity != Fidelity::L2)
    throw std::invalid_argument(
        "SequenceConfig: the dense Tikhonov path supports L2 fidelity only");
  if (x0_policy == X0Policy::Given && x0.size() == 0)
    throw std::invalid_argument("SequenceConfig: x0_policy Given needs an image");
}

double data_fidelity(const ExactModel& model, const Image& y, Fidelity f,
                     const Image& u) {
  Image r = model.evaluate(u) - y;
  if (f == Fidelity::L2) return 0.5 * inner(r, r);
  return norm_l1(r);
}

double objective(const ExactModel& model, const Image& y, double lambda,
                 Fidelity f, const Image& u) {
  return data_fidelity(model, y, f, u) + lambda * total_variation(u);
}

double objective_reg(const ExactModel& model, const Image& y, double lambda,
                     Fidelity f, RegKind reg, const Image& u) {
  return data_fidelity(model, y, f, u) + lambda * regularizer_value(reg, u);
}

double line_search(const ExactModel& model, const Image& y, double lambda,
                   Fidelity f, const Image& x_k, const Image& s_k,
                   int grid_size, RegKind reg) {
  if (grid_size < 2)
    throw std::invalid_argument("line_search: grid_size must be >= 2");
  double best_delta = 0.0;
  double best_value = 0.0;
  for (int i = 0; i < grid_size; ++i) {
    const double delta = static_cast<double>(i) / (grid_size - 1);
    Image candidate = delta * s_k + (1.0 - delta) * x_k;
    const double value = objective_reg(model, y, lambda, f, reg, candidate);
    if (i == 0 || value < best_value) {
      best_value = value;
      best_delta = delta;
    }
  }
  return best_delta;
}

namespace {

// Shared outer loop. `fixed` is null in adaptive mode.
SequenceResult run_outer(const ExactModel& model,
                         std::shared_ptr<const LinearOperator> fixed,
                         const Image& y, const SequenceConfig& cfg) {
  cfg.validate();
  const bool adaptive = !fixed;

  Image x;
  switch (cfg.x0_policy) {
    case X0Policy::Data: x = y; break;
    case X0Policy::Zero: x = Image(y.width(), y.height(), 0.0); break;
    case X0Policy::Given:
      if (!cfg.x0.same_shape(y))
        throw std::invalid_argument("run: given x0 shape mismatch");
      x = cfg.x0;
      break;
  }

  PdhgConfig inner = cfg.inner;
  inner.fidelity = cfg.fidelity;
  inner.lambda = cfg.lambda;

  SequenceTrace trace;
  double objective_prev =
      objective_reg(model, y, cfg.lambda, cfg.fidelity, cfg.reg, x);
  trace.rows.push_back({0, data_fidelity(model, y, cfg.fidelity, x),
                        objective_prev, 0.0, 0, 0.0});

  PdhgState warm;
  bool have_warm = false;
  std::optional<DenseTikhonovSolver> fixed_dense;

  for (int k = 1; k <= cfg.outer_max; ++k) {
    const auto t0 = std::chrono::steady_clock::now();

    AffineApprox approx;
    Image eps;
    if (adaptive) {
      approx = model.linearize_at(x);
      // A(x_k) - Abar(x_k); equals the affine offset because the
      // linearization is exact at its expansion point.
      eps = approx.offset.size() > 0 ? approx.offset
                                     : Image(y.width(), y.height(), 0.0);
    } else {
      approx = AffineApprox{fixed, Image{}};
      eps = model.evaluate(x) - fixed->apply(x);
    }

    Image s;
    int inner_iters = 0;
    if (cfg.reg == RegKind::Tv) {
      PdhgResult res =
          pdhg_solve(approx, y, eps, inner,
                     (cfg.warm_start && have_warm) ? &warm : nullptr, &x);
      s = std::move(res.reconstruction);
      warm = std::move(res.state);
      have_warm = true;
      inner_iters = warm.iters_used;
    } else {
      if (adaptive) {
        DenseTikhonovSolver dense(
            densify(*approx.linear, y.width(), y.height()), cfg.lambda);
        s = dense.solve(y - eps);
      } else {
        if (!fixed_dense)
          fixed_dense.emplace(densify(*fixed, y.width(), y.height()),
                              cfg.lambda);
        s = fixed_dense->solve(y - eps);
      }
      inner_iters = 1;
    }

    double delta = 1.0;
    switch (cfg.damping.kind) {
      case Damping::Kind::None: delta = 1.0; break;
      case Damping::Kind::Constant: delta = cfg.damping.delta; break;
      case Damping::Kind::LineSearch:
        delta = line_search(model, y, cfg.lambda, cfg.fidelity, x, s,
                            cfg.damping.grid_size, cfg.reg);
        break;
    }

    Image x_next = delta * s + (1.0 - delta) * x;
    const double objective_next =
        objective_reg(model, y, cfg.lambda, cfg.fidelity, cfg.reg, x_next);
    trace.rows.push_back({k, data_fidelity(model, y, cfg.fidelity, x_next),
                          objective_next, delta, inner_iters,
                          elapsed_seconds(t0)});

    x = std::move(x_next);
    if (cfg.on_iterate) cfg.on_iterate(k, x);

    const double decrease = objective_prev - objective_next;
    const double threshold =
        cfg.outer_tol * std::max(std::abs(objective_prev), 1e-12);
    objective_prev = objective_next;
    if (cfg.outer_tol >= 0.0 && decrease <= threshold) break;
  }

  return SequenceResult{std::move(x), std::move(trace)};
}

}  // namespace

SequenceResult run_fixed(const ExactModel& model,
                         std::shared_ptr<const LinearOperator> approx,
                         const Image& y, const SequenceConfig& cfg) {
  if (cfg.mode != SequenceMode::Fixed)
    throw std::invalid_argument("run_fixed: config mode must be Fixed");
  if (!approx) throw std::invalid_argument("run_fixed: null approximation");
  return run_outer(model, std::move(approx), y, cfg);
}

SequenceResult run_damped(const ExactModel& model,
                          std::shared_ptr<const LinearOperator> approx,
                          const Image& y, const SequenceConfig& cfg) {
  if (cfg.damping.kind != Damping::Kind::Constant)
    throw std::invalid_argument("run_damped: config needs constant damping");
  return run_fixed(model, std::move(approx), y, cfg);
}

SequenceResult run_adaptive(const ExactModel& model, const Image& y,
                            const SequenceConfig& cfg) {
  if (cfg.mode != SequenceMode::Adaptive)
    throw std::invalid_argument("run_adaptive: config mode must be Adaptive");
  return run_outer(model, nullptr, y, cfg);
}

// ForwardModel conveniences.

double data_fidelity(const ForwardModel& model, const Image& y, Fidelity f,
                     const Image& u) {
  return data_fidelity(NonlinearExactModel(model), y, f, u);
}

double objective(const ForwardModel& model, const Image& y, double lambda,
                 Fidelity f, const Image& u) {
  return objective(NonlinearExactModel(model), y, lambda, f, u);
}

double line_search(const ForwardModel& model, const Image& y, double lambda,
                   Fidelity f, const Image& x_k, const Image& s_k,
                   int grid_size, RegKind reg) {
  return line_search(NonlinearExactModel(model), y, lambda, f, x_k, s_k,
                     grid_size, reg);
}

SequenceResult run_fixed(const ForwardModel& model,
                         std::shared_ptr<const LinearOperator> approx,
                         const Image& y, const SequenceConfig& cfg) {
  return run_fixed(NonlinearExactModel(model), std::move(approx), y, cfg);
}

SequenceResult run_damped(const ForwardModel& model,
                          std::shared_ptr<const LinearOperator> approx,
                          const Image& y, const SequenceConfig& cfg) {
  return run_damped(NonlinearExactModel(model), std::move(approx), y, cfg);
}

SequenceResult run_adaptive(const ForwardModel& model, const Image& y,
                            const SequenceConfig& cfg) {
  return run_adaptive(NonlinearExactModel(model), y, cfg);
}

}  // namespace seqc
