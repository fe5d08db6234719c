#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "seqc/grid.hpp"
#include "seqc/linearize.hpp"
#include "seqc/models.hpp"
#include "seqc/pdhg.hpp"

namespace seqc {

enum class SequenceMode { Fixed, Adaptive };
enum class X0Policy { Data, Zero, Given };

/// Regularizer of the variational problem. Tv is the production choice;
/// Tikhonov (1/2 ||u||^2) switches the inner solver to dense linear algebra
/// and exists for the closed-form and Gauss-Newton instances.
enum class RegKind { Tv, Tikhonov };

struct Damping {
  enum class Kind { None, Constant, LineSearch };
  Kind kind = Kind::None;
  double delta = 1.0;  // Constant
  int grid_size = 11;  // LineSearch

  static Damping none() { return {}; }
  static Damping constant(double delta) { return {Kind::Constant, delta, 11}; }
  static Damping line_search(int grid_size = 11) {
    return {Kind::LineSearch, 1.0, grid_size};
  }
};

struct SequenceConfig {
  SequenceMode mode = SequenceMode::Fixed;
  Damping damping = Damping::none();
  Fidelity fidelity = Fidelity::L2;
  double lambda = 0.1;
  RegKind reg = RegKind::Tv;
  int outer_max = 30;
  /// Stop once the true objective decreases by no more than
  /// outer_tol * max(|L|, 1e-12) over one iteration; negative disables the
  /// objective stop and the loop always runs to outer_max.
  double outer_tol = 1e-5;
  PdhgConfig inner;         ///< inner PDHG settings (Tv regularizer)
  X0Policy x0_policy = X0Policy::Data;
  Image x0;  ///< used when x0_policy == Given
  bool warm_start = true;

  /// Optional hook, called with every accepted iterate.
  std::function<void(int iter, const Image& x)> on_iterate;

  void validate() const;
};

struct TraceRow {
  int iter = 0;
  double data_fidelity = 0.0;  ///< F(A(x_k), y), true model
  double objective = 0.0;      ///< L(x_k) = F(A(x_k), y) + lambda R(x_k)
  double delta = 0.0;          ///< step used to arrive at x_k (0 for x_0)
  int inner_iters = 0;
  double seconds = 0.0;        ///< wall time of the outer iteration
};

struct SequenceTrace {
  std::vector<TraceRow> rows;
};

struct SequenceResult {
  Image reconstruction;
  SequenceTrace trace;
};

/// True-model data fidelity F(A(u), y): 1/2 ||.||_2^2 for L2, ||.||_1 for L1.
double data_fidelity(const ExactModel& model, const Image& y, Fidelity f,
                     const Image& u);
double data_fidelity(const ForwardModel& model, const Image& y, Fidelity f,
                     const Image& u);

/// Full objective with isotropic TV regularization.
double objective(const ExactModel& model, const Image& y, double lambda,
                 Fidelity f, const Image& u);
double objective(const ForwardModel& model, const Image& y, double lambda,
                 Fidelity f, const Image& u);

/// Objective with a selectable regularizer.
double objective_reg(const ExactModel& model, const Image& y, double lambda,
                     Fidelity f, RegKind reg, const Image& u);

/// Grid line search for the damping step: minimizes the true objective over
/// uniform delta in [0,1] (endpoints included), so the result never exceeds
/// the objective at delta = 0.
double line_search(const ExactModel& model, const Image& y, double lambda,
                   Fidelity f, const Image& x_k, const Image& s_k,
                   int grid_size, RegKind reg = RegKind::Tv);
double line_search(const ForwardModel& model, const Image& y, double lambda,
                   Fidelity f, const Image& x_k, const Image& s_k,
                   int grid_size, RegKind reg = RegKind::Tv);

/// Correction sequence with a fixed linear approximation.
SequenceResult run_fixed(const ExactModel& model,
                         std::shared_ptr<const LinearOperator> approx,
                         const Image& y, const SequenceConfig& cfg);
SequenceResult run_fixed(const ForwardModel& model,
                         std::shared_ptr<const LinearOperator> approx,
                         const Image& y, const SequenceConfig& cfg);

/// Same loop, requires constant damping in the configuration.
SequenceResult run_damped(const ExactModel& model,
                          std::shared_ptr<const LinearOperator> approx,
                          const Image& y, const SequenceConfig& cfg);
SequenceResult run_damped(const ForwardModel& model,
                          std::shared_ptr<const LinearOperator> approx,
                          const Image& y, const SequenceConfig& cfg);

/// Correction sequence with the local approximation rebuilt at every iterate.
SequenceResult run_adaptive(const ExactModel& model, const Image& y,
                            const SequenceConfig& cfg);
SequenceResult run_adaptive(const ForwardModel& model, const Image& y,
                            const SequenceConfig& cfg);

}  // namespace seqc
