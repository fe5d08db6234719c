#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "seqc/grid.hpp"

namespace seqc {

enum class ModelKind { LinearDiffusion, NonlinearDiffusion, CurvatureFlow };

struct ModelParams {
  double dt = 0.1;     ///< explicit Euler step; stability requires dt <= 0.25
  int steps = 15;      ///< number of time steps
  double kappa = 0.1;  ///< Perona-Malik contrast parameter (NLD)
  double psi = 0.001;  ///< curvature-flow stabilization threshold (CF)

  void validate() const;
};

/// Diffusion-type forward operator A: x0 -> x_T realized by explicit
/// time stepping in flux form on a staggered half-grid with zero-flux
/// boundary. evaluate, jvp and vjp share the identical recurrence, so jvp
/// is the exact derivative of the discrete map and vjp its exact adjoint.
class ForwardModel {
 public:
  ForwardModel(ModelKind kind, ModelParams params);

  ModelKind kind() const { return kind_; }
  const ModelParams& params() const { return params_; }

  /// Per-step data captured at a linearization point; everything the
  /// tangent and adjoint of one explicit step need.
  struct StepCache;

  /// Forward trajectory through all steps plus the cached per-step fields.
  /// Immutable after construction; safe for concurrent jvp/vjp calls.
  class Linearization {
   public:
    const Image& value() const { return value_; }
    Image jvp(const Image& v) const;
    Image vjp(const Image& w) const;
    int width() const { return width_; }
    int height() const { return height_; }

   private:
    friend class ForwardModel;
    ModelKind kind_;
    ModelParams params_;
    int width_ = 0, height_ = 0;
    Image value_;
    std::vector<StepCache> steps_;
  };

  Image evaluate(const Image& x0) const;
  Image jvp(const Image& x, const Image& v) const;
  Image vjp(const Image& x, const Image& w) const;
  std::shared_ptr<const Linearization> linearize(const Image& x) const;

 private:
  ModelKind kind_;
  ModelParams params_;
};

/// Dense Jacobian of the model at x, column k = jvp(x, e_k).
/// Test support; refuses grids above 4096 pixels.
Eigen::MatrixXd dense_jacobian(const ForwardModel& model, const Image& x);

}  // namespace seqc
