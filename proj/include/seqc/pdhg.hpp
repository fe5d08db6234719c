#pragma once

#include <cstdint>
#include <functional>

#include "seqc/grid.hpp"
#include "seqc/linearize.hpp"

namespace seqc {

enum class Fidelity { L2, L1 };

struct PdhgConfig {
  Fidelity fidelity = Fidelity::L2;
  double lambda = 0.1;     ///< TV regularization weight
  int max_iters = 2000;
  double tol = 1e-6;       ///< relative primal change stopping threshold
  int power_iters = 100;   ///< power-method cap for the operator norm
  double power_tol = 1e-9;
  std::uint64_t power_seed = 0x9e3779b97f4a7c15ull;  ///< start-vector stream

  void validate() const;
};

/// Primal-dual iterate bundle, carried across outer iterations for warm
/// starts. Owned by one solve at a time.
struct PdhgState {
  Image u, u_bar;  // primal and extrapolated primal
  Image p;         // data-term dual
  VectorField q;   // TV dual
  double tau = 0.0, sigma = 0.0;
  int iters_used = 0;
};

struct PowerOptions {
  int max_iters = 100;
  double tol = 1e-9;
  bool stack_grad = true;  ///< estimate ||(op, grad)|| instead of ||op||
  std::uint64_t seed = 0x9e3779b97f4a7c15ull;
};

/// Operator norm of op (or of the stacked map v -> (op v, grad v)) by power
/// iteration on the composed self-adjoint map. Returns 0 for the zero
/// operator.
double operator_norm(const LinearOperator& op, int width, int height,
                     const PowerOptions& opts = {});

/// Dual step for squared-L2 fidelity: (p + sigma r)/(1 + sigma), pointwise.
Image prox_dual_l2(const Image& p, const Image& r, double sigma);

/// Dual step for L1 fidelity: projection of p + sigma r onto [-1,1].
Image prox_dual_l1(const Image& p, const Image& r, double sigma);

/// Dual step for isotropic TV: per-pixel projection of q + sigma g onto the
/// lambda-ball.
VectorField prox_dual_tv(const VectorField& q, const VectorField& g,
                         double sigma, double lambda);

struct PdhgResult {
  Image reconstruction;  // final extrapolated primal
  PdhgState state;
};

using PdhgObserver = std::function<void(int iter, const PdhgState& state)>;

/// Chambolle-Pock iteration for min_u F(Au, y - eps) + lambda TV(u), with A
/// the linear part of `approx` (the affine offset is expected to be folded
/// into eps by the caller). Step sizes tau = sigma = 1/K with K the stacked
/// operator norm; extrapolation factor fixed at 1. Stops on relative primal
/// change below cfg.tol or at cfg.max_iters.
///
/// `warm` resumes from a previous state; otherwise iterates start from
/// `init` (zero when null). `observer`, when set, sees the state after every
/// iteration.
PdhgResult pdhg_solve(const AffineApprox& approx, const Image& y,
                      const Image& eps, const PdhgConfig& cfg,
                      const PdhgState* warm = nullptr,
                      const Image* init = nullptr,
                      const PdhgObserver& observer = {});

}  // namespace seqc
