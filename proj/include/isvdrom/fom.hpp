#pragma once

// Full-order models behind one right-hand-side interface, plus the implicit
// backward-Euler stepper used both for the ground truth (step dt) and for the
// lookahead correction signal (step z*dt).
//
// States are stored variable-interleaved: row = cell * n_var + var.

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "isvdrom/dense_numerics.hpp"

namespace isvdrom {

enum class Boundary { Periodic, ZeroGradient };

class FomProblem {
 public:
  FomProblem(Index n_elem, Index n_var, double length, Boundary boundary);
  virtual ~FomProblem() = default;

  Index n_elem() const { return n_elem_; }
  Index n_var() const { return n_var_; }
  Index size() const { return n_elem_ * n_var_; }
  double dx() const { return dx_; }
  double length() const { return length_; }
  Boundary boundary() const { return boundary_; }
  /// Cells on each side needed to evaluate one residual row.
  Index stencil_radius() const { return 1; }

  /// Cell index `offset` cells away, wrapped (periodic) or clamped (ghost copy).
  Index neighbor(Index cell, Index offset) const;

  virtual std::string name() const = 0;
  /// Names of the physical fields reported by `fields`.
  virtual std::vector<std::string> field_names() const = 0;
  /// Physical fields per cell (n_elem x n_fields), used for error metrics.
  virtual Matrix fields(const Vector& q) const = 0;
  /// Grid coordinates (nodes or cell centers), length n_elem.
  virtual Vector coordinates() const = 0;
  virtual Vector initial_state() const = 0;

  /// Semi-discrete right-hand side f(q) on every row.
  virtual void rhs(const Vector& q, Vector& f) const = 0;
  Vector rhs(const Vector& q) const;

  /// f(q) on the listed rows only. Reads q exclusively inside the stencil of
  /// each requested row, so entries outside that closure may hold garbage.
  virtual void rhs_rows(const Vector& q, std::span<const Index> rows, Vector& out) const = 0;

 private:
  Index n_elem_;
  Index n_var_;
  double length_;
  double dx_;
  Boundary boundary_;
};

/// u_t + u u_x = nu u_xx on [0, 1), periodic; sign-dependent first-order
/// upwinding of u u_x and centered diffusion.
class BurgersProblem final : public FomProblem {
 public:
  BurgersProblem(Index n_elem, double viscosity, double ic_width = 0.1);

  double viscosity() const { return nu_; }
  using FomProblem::rhs;

  std::string name() const override { return "burgers"; }
  std::vector<std::string> field_names() const override { return {"u"}; }
  Matrix fields(const Vector& q) const override;
  Vector coordinates() const override;
  /// Gaussian pulse exp(-((x - 1/2) / width)^2 / 2) sampled at x_i = i dx.
  Vector initial_state() const override;
  void rhs(const Vector& q, Vector& f) const override;
  void rhs_rows(const Vector& q, std::span<const Index> rows, Vector& out) const override;

 private:
  double row_rhs(const Vector& q, Index i) const;

  double nu_;
  double ic_width_;
};

using Conserved = std::array<double, 3>;  // (rho, m, E)

inline constexpr double kDensityFloor = 1e-10;
inline constexpr double kPressureFloor = 1e-10;

struct Primitive {
  double rho;
  double u;
  double p;
};

/// Velocity and pressure from a conserved triplet with density and pressure floors.
Primitive to_primitive(const Conserved& state, double gamma);
Conserved to_conserved(const Primitive& prim, double gamma);
Conserved euler_flux(const Conserved& state, double gamma);
/// Local Lax-Friedrichs interface flux.
Conserved rusanov_flux(const Conserved& left, const Conserved& right, double gamma);

/// 1D Euler equations on [0, 1], first-order finite volume, Rusanov flux,
/// zero-gradient ghost cells. Initial state is the Sod shock tube.
class EulerProblem final : public FomProblem {
 public:
  EulerProblem(Index n_elem, double gamma = 1.4);

  double gamma() const { return gamma_; }
  using FomProblem::rhs;

  std::string name() const override { return "sod"; }
  std::vector<std::string> field_names() const override { return {"rho", "u", "p"}; }
  Matrix fields(const Vector& q) const override;
  Vector coordinates() const override;
  Vector initial_state() const override;
  void rhs(const Vector& q, Vector& f) const override;
  void rhs_rows(const Vector& q, std::span<const Index> rows, Vector& out) const override;

  Conserved cell(const Vector& q, Index i) const;

 private:
  double gamma_;
};

enum class LinearSolver { Sparse, Dense, Banded };

struct TimeStepper {
  double dt = 1e-3;
  double newton_tol = 1e-8;
  int newton_max_iter = 10;
  /// Banded LU requires a non-periodic model.
  LinearSolver solver = LinearSolver::Sparse;
};

struct StepResult {
  Vector q;
  bool converged = false;
  int iterations = 0;
  double residual_norm = 0.0;
};

/// Jacobian of f by forward differences (step 1e-7 * max(1, |q_j|)),
/// perturbing structurally independent columns together.
Matrix fd_jacobian(const FomProblem& model, const Vector& q);

/// Solves q' - q - dt f(q') = 0 by Newton from q' = q. Non-convergence is
/// reported through StepResult::converged, never thrown.
StepResult implicit_step(const FomProblem& model, const Vector& q, const TimeStepper& stepper);

/// One implicit step of size z * dt: the lookahead correction snapshot.
StepResult coarse_step(const FomProblem& model, const Vector& y, int z, const TimeStepper& stepper);

}  // namespace isvdrom
