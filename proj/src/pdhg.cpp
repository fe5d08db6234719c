#include "seqc/pdhg.hpp"

#include <cmath>
#include <stdexcept>

#include "seqc/rng.hpp"

namespace seqc {

void PdhgConfig::validate() const {
  if (!(lambda > 0.0))
    throw std::invalid_argument("PdhgConfig: lambda must be > 0");
  if (max_iters < 1)
    throw std::invalid_argument("PdhgConfig: max_iters must be >= 1");
  if (power_iters < 1)
    throw std::invalid_argument("PdhgConfig: power_iters must be >= 1");
}

double operator_norm(const LinearOperator& op, int width, int height,
                     const PowerOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  Image v(width, height);
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = uniform_unit(rng) - 0.5;
  double nv = norm_l2(v);
  if (nv == 0.0) return 0.0;
  v *= 1.0 / nv;

  double eig = 0.0;
  for (int it = 0; it < opts.max_iters; ++it) {
    // w = (op* op + grad* grad) v; grad* = -div.
    Image w = op.apply_adjoint(op.apply(v));
    if (opts.stack_grad) w -= div(grad(v));
    const double eig_new = inner(v, w);
    const double nw = norm_l2(w);
    if (nw == 0.0) return 0.0;
    w *= 1.0 / nw;
    v = std::move(w);
    const bool converged =
        it > 0 && std::abs(eig_new - eig) <= opts.tol * std::max(std::abs(eig_new), 1e-300);
    eig = eig_new;
    if (converged) break;
  }
  return std::sqrt(std::max(eig, 0.0));
}

Image prox_dual_l2(const Image& p, const Image& r, double sigma) {
  if (!p.same_shape(r)) throw std::invalid_argument("prox_dual_l2: shape mismatch");
  Image out(p.width(), p.height());
  const double denom = 1.0 + sigma;
  for (std::size_t i = 0; i < p.size(); ++i)
    out[i] = (p[i] + sigma * r[i]) / denom;
  return out;
}

Image prox_dual_l1(const Image& p, const Image& r, double sigma) {
  if (!p.same_shape(r)) throw std::invalid_argument("prox_dual_l1: shape mismatch");
  Image out(p.width(), p.height());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double t = p[i] + sigma * r[i];
    out[i] = t / std::max(1.0, std::abs(t));
  }
  return out;
}

VectorField prox_dual_tv(const VectorField& q, const VectorField& g,
                         double sigma, double lambda) {
  if (!q.same_shape(g)) throw std::invalid_argument("prox_dual_tv: shape mismatch");
  VectorField out(q.width, q.height);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double tx = q.dx[i] + sigma * g.dx[i];
    const double ty = q.dy[i] + sigma * g.dy[i];
    const double mag = std::sqrt(tx * tx + ty * ty);
    const double scale = lambda / std::max(lambda, mag);
    out.dx[i] = scale * tx;
    out.dy[i] = scale * ty;
  }
  return out;
}

PdhgResult pdhg_solve(const AffineApprox& approx, const Image& y,
                      const Image& eps, const PdhgConfig& cfg,
                      const PdhgState* warm, const Image* init,
                      const PdhgObserver& observer) {
  cfg.validate();
  if (!y.same_shape(eps)) throw std::invalid_argument("pdhg_solve: y/eps shape mismatch");
  const int w = y.width(), h = y.height();

  PdhgState st;
  if (warm) {
    if (!warm->u.same_shape(y))
      throw std::invalid_argument("pdhg_solve: warm state shape mismatch");
    st = *warm;
  } else {
    st.u = init ? *init : Image(w, h, 0.0);
    if (!st.u.same_shape(y))
      throw std::invalid_argument("pdhg_solve: init shape mismatch");
    st.u_bar = st.u;
    st.p = Image(w, h, 0.0);
    st.q = VectorField(w, h);
  }

  const double K = operator_norm(
      *approx.linear, w, h,
      PowerOptions{cfg.power_iters, cfg.power_tol, true, cfg.power_seed});
  if (!(K > 0.0))
    throw std::runtime_error("pdhg_solve: degenerate operator (norm 0)");
  const double tau = 1.0 / K;
  const double sigma = 1.0 / K;
  const double theta = 1.0;
  st.tau = tau;
  st.sigma = sigma;

  const Image y_eff = y - eps;

  for (int t = 0; t < cfg.max_iters; ++t) {
    Image r = approx.linear->apply(st.u_bar);
    r -= y_eff;
    st.p = cfg.fidelity == Fidelity::L2 ? prox_dual_l2(st.p, r, sigma)
                                        : prox_dual_l1(st.p, r, sigma);
    st.q = prox_dual_tv(st.q, grad(st.u_bar), sigma, cfg.lambda);

    Image u_next = st.u;
    add_scaled(u_next, -tau, approx.linear->apply_adjoint(st.p));
    add_scaled(u_next, tau, div(st.q));
    if (!u_next.all_finite())
      throw std::runtime_error("pdhg_solve: non-finite iterate");

    double change2 = 0.0;
    for (std::size_t i = 0; i < u_next.size(); ++i) {
      const double d = u_next[i] - st.u[i];
      change2 += d * d;
    }
    const double rel_change =
        std::sqrt(change2) / std::max(norm_l2(st.u), 1.0);

    // u_bar = u_next + theta (u_next - u)
    st.u_bar = u_next;
    st.u_bar *= 1.0 + theta;
    add_scaled(st.u_bar, -theta, st.u);
    st.u = std::move(u_next);
    st.iters_used = t + 1;

    if (observer) observer(t, st);
    if (rel_change < cfg.tol) break;
  }

  return PdhgResult{st.u_bar, std::move(st)};
}

}  // namespace seqc
