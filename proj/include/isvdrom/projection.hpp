#pragma once

// Hyper-reduced reduced-order time stepping. Nonlinear terms are evaluated
// only at the sampled rows, from state values decoded on the stencil closure.

#include <string>

#include "isvdrom/fom.hpp"
#include "isvdrom/hyper_reduction.hpp"
#include "isvdrom/snapshots.hpp"

namespace isvdrom {

enum class ProjectionKind { Galerkin, Lspg };

std::string projection_name(ProjectionKind kind);
ProjectionKind parse_projection(const std::string& name);

struct RomWorkspace;

class RomOperator {
 public:
  /// Computes the stencil closure of `sampling` and (P^T Phi)^+.
  RomOperator(const FomProblem& model, ReducedBasis basis, ScalingTransform scaling, SamplingSet sampling,
              ProjectionKind kind);

  const ReducedBasis& basis() const { return basis_; }
  const ScalingTransform& scaling() const { return scaling_; }
  const SamplingSet& sampling() const { return sampling_; }
  const Matrix& deim_pinv() const { return deim_pinv_; }
  ProjectionKind kind() const { return kind_; }
  Index rank() const { return basis_.rank(); }
  Index state_size() const { return basis_.rows(); }

  /// a = Phi^T D (q - q_ref)
  Vector encode(const Vector& q) const;
  /// q_ref + D^{-1} Phi a
  Vector decode(const Vector& a) const;

  /// Writes q_ref + D^{-1} Phi a into `q` on the closure rows only.
  void decode_closure(const Vector& a, Vector& q) const;
  /// Scaled sampled right-hand side P^T D f(q(a)), decoding into `ws`.
  Vector sampled_rhs(const FomProblem& model, const Vector& a, RomWorkspace& ws) const;
  /// P^T Phi
  const Matrix& phi_sampled() const { return phi_sampled_; }

 private:
  ReducedBasis basis_;
  ScalingTransform scaling_;
  SamplingSet sampling_;
  Matrix deim_pinv_;
  ProjectionKind kind_;
  Matrix phi_closure_;     // closure rows of Phi
  Vector ref_closure_;     // closure rows of q_ref
  Vector dinv_closure_;    // closure rows of D^{-1}
  Matrix phi_sampled_;     // sampled rows of Phi
  Vector d_sampled_;       // sampled rows of D
};

/// Per-trajectory scratch. The decoded state starts as NaN everywhere so a
/// read outside the closure poisons the result.
struct RomWorkspace {
  explicit RomWorkspace(Index state_size);
  Vector q;
  Vector f;
};

struct RomStepOptions {
  double tol = 1e-8;
  int max_iter = 10;
  /// Iteration also stops once ||delta|| <= step_tol * max(1, ||a||).
  double step_tol = 1e-12;
};

struct RomStepResult {
  Vector a;
  bool converged = false;
  int iterations = 0;
  double residual_norm = 0.0;
};

/// Backward Euler on the hyper-reduced Galerkin system
/// a' - a - dt (P^T Phi)^+ P^T D f(q(a')) = 0, Newton with an FD Jacobian.
RomStepResult galerkin_step(const RomOperator& op, const FomProblem& model, const Vector& a, double dt,
                            RomWorkspace& ws, const RomStepOptions& options = {});

/// The hyper-reduced LSPG objective ||(P^T Phi)^+ P^T D r(q(a'))||^2 with
/// r(q') = q' - q(a) - dt f(q').
double lspg_objective(const RomOperator& op, const FomProblem& model, const Vector& a_prev, const Vector& a_hat,
                      double dt, RomWorkspace& ws);

/// Gauss-Newton minimization of lspg_objective. Stops when the reduced
/// gradient ||J^T R|| <= tol.
RomStepResult lspg_step(const RomOperator& op, const FomProblem& model, const Vector& a, double dt, RomWorkspace& ws,
                        const RomStepOptions& options = {});

/// Dispatches on op.kind().
RomStepResult rom_step(const RomOperator& op, const FomProblem& model, const Vector& a, double dt, RomWorkspace& ws,
                       const RomStepOptions& options = {});

}  // namespace isvdrom
