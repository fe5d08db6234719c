#include "seqc/models.hpp"

#include <cmath>
#include <stdexcept>

namespace seqc {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Averages a node field onto x-faces: out(i,j) = (s(i,j)+s(i,j+1))/2 for
// j < w-1, zero in the last column (no face there).
Image face_avg_x(const Image& s) {
  const int w = s.width(), h = s.height();
  Image out(w, h);
  for (int i = 0; i < h; ++i) {
    const std::size_t row = static_cast<std::size_t>(i) * w;
    for (int j = 0; j < w - 1; ++j)
      out[row + j] = 0.5 * (s[row + j] + s[row + j + 1]);
  }
  return out;
}

Image face_avg_y(const Image& s) {
  const int w = s.width(), h = s.height();
  Image out(w, h);
  for (int i = 0; i < h - 1; ++i) {
    const std::size_t row = static_cast<std::size_t>(i) * w;
    for (int j = 0; j < w; ++j)
      out[row + j] = 0.5 * (s[row + j] + s[row + w + j]);
  }
  return out;
}

// Exact adjoint of s -> (face_avg_x(s), face_avg_y(s)).
Image face_avg_adjoint(const Image& fx, const Image& fy) {
  const int w = fx.width(), h = fx.height();
  Image out(w, h);
  for (int i = 0; i < h; ++i) {
    const std::size_t row = static_cast<std::size_t>(i) * w;
    for (int j = 0; j < w; ++j) {
      double r = 0.0;
      if (j < w - 1) r += fx[row + j];
      if (j > 0) r += fx[row + j - 1];
      if (i < h - 1) r += fy[row + j];
      if (i > 0) r += fy[row - w + j];
      out[row + j] = 0.5 * r;
    }
  }
  return out;
}

Image node_magnitude_squared(const VectorField& g) {
  Image q(g.width, g.height);
  for (std::size_t i = 0; i < g.size(); ++i)
    q[i] = g.dx[i] * g.dx[i] + g.dy[i] * g.dy[i];
  return q;
}

// psi-stabilized magnitude sqrt(|g|^2 + psi^2), smooth on the psi scale the
// curvature-flow formula already carries.
Image node_magnitude(const VectorField& g, double psi) {
  Image m(g.width, g.height);
  for (std::size_t i = 0; i < g.size(); ++i)
    m[i] = std::sqrt(g.dx[i] * g.dx[i] + g.dy[i] * g.dy[i] + psi * psi);
  return m;
}

}  // namespace

struct ForwardModel::StepCache {
  VectorField g;           // gradient of the state entering the step
  Image gamma_x, gamma_y;  // face diffusivity
  Image inv_m;             // CF only: 1/sqrt(|g|^2 + psi^2) at nodes
  Image mult;              // CF only: m + psi
  Image c;                 // CF only: div(gamma .* g)
};

void ModelParams::validate() const {
  if (!(dt > 0.0 && dt <= 0.25))
    throw std::invalid_argument("ModelParams: dt must be in (0, 0.25]");
  if (steps < 1) throw std::invalid_argument("ModelParams: steps must be >= 1");
  if (!(kappa > 0.0)) throw std::invalid_argument("ModelParams: kappa must be > 0");
  if (!(psi > 0.0)) throw std::invalid_argument("ModelParams: psi must be > 0");
}

ForwardModel::ForwardModel(ModelKind kind, ModelParams params)
    : kind_(kind), params_(params) {
  params_.validate();
}

namespace {

// One explicit Euler step. Fills *cache when non-null (linearization point).
Image apply_step(ModelKind kind, const ModelParams& p, const Image& x,
                 ForwardModel::StepCache* cache) {
  VectorField g = grad(x);
  const std::size_t n = g.size();

  if (kind == ModelKind::LinearDiffusion) {
    Image out = x;
    add_scaled(out, p.dt, div(g));
    if (cache) cache->g = std::move(g);
    return out;
  }

  if (kind == ModelKind::NonlinearDiffusion) {
    // Perona-Malik diffusivity from the squared gradient magnitude averaged
    // to the face; rational in the gradient, so the recurrence is smooth.
    Image q = node_magnitude_squared(g);
    Image qfx = face_avg_x(q);
    Image qfy = face_avg_y(q);
    const double inv_k2 = 1.0 / (p.kappa * p.kappa);
    Image gx(x.width(), x.height()), gy(x.width(), x.height());
    for (std::size_t i = 0; i < n; ++i) {
      gx[i] = 1.0 / (1.0 + qfx[i] * inv_k2);
      gy[i] = 1.0 / (1.0 + qfy[i] * inv_k2);
    }
    VectorField flux(x.width(), x.height());
    for (std::size_t i = 0; i < n; ++i) {
      flux.dx[i] = gx[i] * g.dx[i];
      flux.dy[i] = gy[i] * g.dy[i];
    }
    Image out = x;
    add_scaled(out, p.dt, div(flux));
    if (cache) {
      cache->g = std::move(g);
      cache->gamma_x = std::move(gx);
      cache->gamma_y = std::move(gy);
    }
    return out;
  }

  // Curvature flow: x + dt (m + psi) div(grad x / (m_face + psi)).
  Image m = node_magnitude(g, p.psi);
  Image mfx = face_avg_x(m);
  Image mfy = face_avg_y(m);
  Image gx(x.width(), x.height()), gy(x.width(), x.height());
  for (std::size_t i = 0; i < n; ++i) {
    gx[i] = 1.0 / (mfx[i] + p.psi);
    gy[i] = 1.0 / (mfy[i] + p.psi);
  }
  VectorField flux(x.width(), x.height());
  for (std::size_t i = 0; i < n; ++i) {
    flux.dx[i] = gx[i] * g.dx[i];
    flux.dy[i] = gy[i] * g.dy[i];
  }
  Image c = div(flux);
  Image out = x;
  for (std::size_t i = 0; i < n; ++i) out[i] += p.dt * (m[i] + p.psi) * c[i];
  if (cache) {
    Image mult(x.width(), x.height()), inv_m(x.width(), x.height());
    for (std::size_t i = 0; i < n; ++i) {
      mult[i] = m[i] + p.psi;
      inv_m[i] = 1.0 / m[i];
    }
    cache->g = std::move(g);
    cache->inv_m = std::move(inv_m);
    cache->gamma_x = std::move(gx);
    cache->gamma_y = std::move(gy);
    cache->mult = std::move(mult);
    cache->c = std::move(c);
  }
  return out;
}

// Exact directional derivative of apply_step at the cached state.
Image tangent_step(ModelKind kind, const ModelParams& p,
                   const ForwardModel::StepCache& cache, const Image& v) {
  VectorField gv = grad(v);
  const std::size_t n = gv.size();

  if (kind == ModelKind::LinearDiffusion) {
    Image out = v;
    add_scaled(out, p.dt, div(gv));
    return out;
  }

  const VectorField& g = cache.g;

  if (kind == ModelKind::NonlinearDiffusion) {
    // d(gamma) = -gamma^2/kappa^2 * avg(d|g|^2), d|g|^2 = 2 g . grad(v).
    const double inv_k2 = 1.0 / (p.kappa * p.kappa);
    Image dq(v.width(), v.height());
    for (std::size_t i = 0; i < n; ++i)
      dq[i] = 2.0 * (g.dx[i] * gv.dx[i] + g.dy[i] * gv.dy[i]);
    Image dqfx = face_avg_x(dq);
    Image dqfy = face_avg_y(dq);
    VectorField flux(v.width(), v.height());
    for (std::size_t i = 0; i < n; ++i) {
      const double dgx = -cache.gamma_x[i] * cache.gamma_x[i] * inv_k2 * dqfx[i];
      const double dgy = -cache.gamma_y[i] * cache.gamma_y[i] * inv_k2 * dqfy[i];
      flux.dx[i] = cache.gamma_x[i] * gv.dx[i] + dgx * g.dx[i];
      flux.dy[i] = cache.gamma_y[i] * gv.dy[i] + dgy * g.dy[i];
    }
    Image out = v;
    add_scaled(out, p.dt, div(flux));
    return out;
  }

  Image s(v.width(), v.height());
  for (std::size_t i = 0; i < n; ++i)
    s[i] = cache.inv_m[i] * (g.dx[i] * gv.dx[i] + g.dy[i] * gv.dy[i]);
  Image sfx = face_avg_x(s);
  Image sfy = face_avg_y(s);

  // CF: dv + dt [ s .* c + mult .* div(gamma .* gv - gamma^2 .* avg(s) .* g) ]
  VectorField flux(v.width(), v.height());
  for (std::size_t i = 0; i < n; ++i) {
    flux.dx[i] = cache.gamma_x[i] * gv.dx[i] -
                 cache.gamma_x[i] * cache.gamma_x[i] * sfx[i] * g.dx[i];
    flux.dy[i] = cache.gamma_y[i] * gv.dy[i] -
                 cache.gamma_y[i] * cache.gamma_y[i] * sfy[i] * g.dy[i];
  }
  Image dc = div(flux);
  Image out = v;
  for (std::size_t i = 0; i < n; ++i)
    out[i] += p.dt * (s[i] * cache.c[i] + cache.mult[i] * dc[i]);
  return out;
}

// Exact adjoint of tangent_step.
Image adjoint_step(ModelKind kind, const ModelParams& p,
                   const ForwardModel::StepCache& cache, const Image& w) {
  if (kind == ModelKind::LinearDiffusion) {
    Image out = w;
    add_scaled(out, p.dt, div(grad(w)));
    return out;
  }

  const VectorField& g = cache.g;
  const std::size_t n = g.size();

  if (kind == ModelKind::NonlinearDiffusion) {
    const double inv_k2 = 1.0 / (p.kappa * p.kappa);
    VectorField gw = grad(w);
    Image fx(w.width(), w.height()), fy(w.width(), w.height());
    for (std::size_t i = 0; i < n; ++i) {
      fx[i] = -cache.gamma_x[i] * cache.gamma_x[i] * inv_k2 * g.dx[i] * gw.dx[i];
      fy[i] = -cache.gamma_y[i] * cache.gamma_y[i] * inv_k2 * g.dy[i] * gw.dy[i];
    }
    Image r = face_avg_adjoint(fx, fy);
    VectorField flux(w.width(), w.height());
    for (std::size_t i = 0; i < n; ++i) {
      flux.dx[i] = cache.gamma_x[i] * gw.dx[i] + 2.0 * r[i] * g.dx[i];
      flux.dy[i] = cache.gamma_y[i] * gw.dy[i] + 2.0 * r[i] * g.dy[i];
    }
    Image out = w;
    add_scaled(out, p.dt, div(flux));
    return out;
  }

  // CF adjoint: with z = mult .* w,
  //   w + dt div( gamma .* grad z + g .* inv_m .* (r2 - c .* w) ),
  //   r2 = avg^T( -gamma^2 .* g .* grad z ).
  Image z(w.width(), w.height());
  for (std::size_t i = 0; i < n; ++i) z[i] = cache.mult[i] * w[i];
  VectorField gz = grad(z);
  Image fx(w.width(), w.height()), fy(w.width(), w.height());
  for (std::size_t i = 0; i < n; ++i) {
    fx[i] = -cache.gamma_x[i] * cache.gamma_x[i] * g.dx[i] * gz.dx[i];
    fy[i] = -cache.gamma_y[i] * cache.gamma_y[i] * g.dy[i] * gz.dy[i];
  }
  Image r2 = face_avg_adjoint(fx, fy);
  VectorField flux(w.width(), w.height());
  for (std::size_t i = 0; i < n; ++i) {
    const double t = cache.inv_m[i] * (r2[i] - cache.c[i] * w[i]);
    flux.dx[i] = cache.gamma_x[i] * gz.dx[i] + t * g.dx[i];
    flux.dy[i] = cache.gamma_y[i] * gz.dy[i] + t * g.dy[i];
  }
  Image out = w;
  add_scaled(out, p.dt, div(flux));
  return out;
}

}  // namespace

Image ForwardModel::evaluate(const Image& x0) const {
  Image x = x0;
  for (int t = 0; t < params_.steps; ++t) {
    x = apply_step(kind_, params_, x, nullptr);
    if (!x.all_finite())
      throw std::runtime_error(
          "ForwardModel::evaluate: non-finite state (unstable step size?)");
  }
  return x;
}

std::shared_ptr<const ForwardModel::Linearization> ForwardModel::linearize(
    const Image& x) const {
  auto lin = std::make_shared<Linearization>();
  lin->kind_ = kind_;
  lin->params_ = params_;
  lin->width_ = x.width();
  lin->height_ = x.height();
  lin->steps_.resize(params_.steps);
  Image state = x;
  for (int t = 0; t < params_.steps; ++t) {
    state = apply_step(kind_, params_, state, &lin->steps_[t]);
    if (!state.all_finite())
      throw std::runtime_error(
          "ForwardModel::linearize: non-finite state (unstable step size?)");
  }
  lin->value_ = std::move(state);
  return lin;
}

Image ForwardModel::Linearization::jvp(const Image& v) const {
  require(v.width() == width_ && v.height() == height_,
          "Linearization::jvp: shape mismatch");
  Image vt = v;
  for (const auto& cache : steps_) vt = tangent_step(kind_, params_, cache, vt);
  return vt;
}

Image ForwardModel::Linearization::vjp(const Image& w) const {
  require(w.width() == width_ && w.height() == height_,
          "Linearization::vjp: shape mismatch");
  Image wt = w;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it)
    wt = adjoint_step(kind_, params_, *it, wt);
  return wt;
}

Image ForwardModel::jvp(const Image& x, const Image& v) const {
  require(x.same_shape(v), "ForwardModel::jvp: shape mismatch");
  return linearize(x)->jvp(v);
}

Image ForwardModel::vjp(const Image& x, const Image& w) const {
  require(x.same_shape(w), "ForwardModel::vjp: shape mismatch");
  return linearize(x)->vjp(w);
}

Eigen::MatrixXd dense_jacobian(const ForwardModel& model, const Image& x) {
  const std::size_t n = x.size();
  require(n <= 4096, "dense_jacobian: grid too large (limit 4096 pixels)");
  auto lin = model.linearize(x);
  Eigen::MatrixXd jac(n, n);
  Image basis(x.width(), x.height(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    basis[k] = 1.0;
    Image col = lin->jvp(basis);
    for (std::size_t i = 0; i < n; ++i) jac(i, k) = col[i];
    basis[k] = 0.0;
  }
  return jac;
}

}  // namespace seqc
