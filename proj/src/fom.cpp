#include "isvdrom/fom.hpp"

#include <lapacke.h>

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <string>

namespace isvdrom {

FomProblem::FomProblem(Index n_elem, Index n_var, double length, Boundary boundary)
    : n_elem_(n_elem), n_var_(n_var), length_(length), dx_(length / static_cast<double>(n_elem)),
      boundary_(boundary) {
  if (n_elem < 4) fail(ErrorKind::Argument, "FomProblem: n_elem must be >= 4, got " + std::to_string(n_elem));
  if (n_var < 1) fail(ErrorKind::Argument, "FomProblem: n_var must be >= 1");
}

Index FomProblem::neighbor(Index cell, Index offset) const {
  const Index j = cell + offset;
  if (boundary_ == Boundary::Periodic) return ((j % n_elem_) + n_elem_) % n_elem_;
  return std::clamp<Index>(j, 0, n_elem_ - 1);
}

Vector FomProblem::rhs(const Vector& q) const {
  Vector f(size());
  rhs(q, f);
  return f;
}

// ---------------------------------------------------------------------------
// Burgers

BurgersProblem::BurgersProblem(Index n_elem, double viscosity, double ic_width)
    : FomProblem(n_elem, 1, 1.0, Boundary::Periodic), nu_(viscosity), ic_width_(ic_width) {
  if (!(viscosity > 0.0)) fail(ErrorKind::Argument, "BurgersProblem: viscosity must be positive");
}

Vector BurgersProblem::coordinates() const {
  return Vector::LinSpaced(n_elem(), 0.0, dx() * static_cast<double>(n_elem() - 1));
}

Vector BurgersProblem::initial_state() const {
  const Vector x = coordinates();
  const double center = 0.5 * length();
  return ((x.array() - center) / ic_width_).square().unaryExpr([](double s) { return std::exp(-0.5 * s); });
}

Matrix BurgersProblem::fields(const Vector& q) const { return q; }

double BurgersProblem::row_rhs(const Vector& q, Index i) const {
  const double um = q(neighbor(i, -1));
  const double ui = q(i);
  const double up = q(neighbor(i, 1));
  const double h = dx();
  const double convection = ui >= 0.0 ? ui * (ui - um) / h : ui * (up - ui) / h;
  return -convection + nu_ * (um - 2.0 * ui + up) / (h * h);
}

void BurgersProblem::rhs(const Vector& q, Vector& f) const {
  f.resize(size());
  for (Index i = 0; i < n_elem(); ++i) f(i) = row_rhs(q, i);
}

void BurgersProblem::rhs_rows(const Vector& q, std::span<const Index> rows, Vector& out) const {
  out.resize(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) out(static_cast<Index>(k)) = row_rhs(q, rows[k]);
}

// ---------------------------------------------------------------------------
// Euler

Primitive to_primitive(const Conserved& state, double gamma) {
  const double rho = std::max(state[0], kDensityFloor);
  const double u = state[1] / rho;
  const double p = std::max((gamma - 1.0) * (state[2] - 0.5 * rho * u * u), kPressureFloor);
  return {rho, u, p};
}

Conserved to_conserved(const Primitive& prim, double gamma) {
  return {prim.rho, prim.rho * prim.u, prim.p / (gamma - 1.0) + 0.5 * prim.rho * prim.u * prim.u};
}

Conserved euler_flux(const Conserved& state, double gamma) {
  const Primitive w = to_primitive(state, gamma);
  const double m = w.rho * w.u;
  return {m, m * w.u + w.p, w.u * (state[2] + w.p)};
}

Conserved rusanov_flux(const Conserved& left, const Conserved& right, double gamma) {
  const Primitive wl = to_primitive(left, gamma);
  const Primitive wr = to_primitive(right, gamma);
  const double cl = std::sqrt(gamma * wl.p / wl.rho);
  const double cr = std::sqrt(gamma * wr.p / wr.rho);
  const double s = std::max(std::abs(wl.u) + cl, std::abs(wr.u) + cr);
  const Conserved fl = euler_flux(left, gamma);
  const Conserved fr = euler_flux(right, gamma);
  Conserved out;
  for (std::size_t v = 0; v < 3; ++v) out[v] = 0.5 * (fl[v] + fr[v]) - 0.5 * s * (right[v] - left[v]);
  return out;
}

EulerProblem::EulerProblem(Index n_elem, double gamma)
    : FomProblem(n_elem, 3, 1.0, Boundary::ZeroGradient), gamma_(gamma) {
  if (!(gamma > 1.0)) fail(ErrorKind::Argument, "EulerProblem: gamma must exceed 1");
}

Conserved EulerProblem::cell(const Vector& q, Index i) const {
  return {q(3 * i), q(3 * i + 1), q(3 * i + 2)};
}

Vector EulerProblem::coordinates() const {
  return Vector::LinSpaced(n_elem(), 0.5 * dx(), length() - 0.5 * dx());
}

Vector EulerProblem::initial_state() const {
  const Vector x = coordinates();
  Vector q(size());
  const Conserved left = to_conserved({1.0, 0.0, 1.0}, gamma_);
  const Conserved right = to_conserved({0.125, 0.0, 0.1}, gamma_);
  for (Index i = 0; i < n_elem(); ++i) {
    const Conserved& s = x(i) < 0.5 * length() ? left : right;
    for (Index v = 0; v < 3; ++v) q(3 * i + v) = s[static_cast<std::size_t>(v)];
  }
  return q;
}

Matrix EulerProblem::fields(const Vector& q) const {
  Matrix out(n_elem(), 3);
  for (Index i = 0; i < n_elem(); ++i) {
    const Primitive w = to_primitive(cell(q, i), gamma_);
    out(i, 0) = w.rho;
    out(i, 1) = w.u;
    out(i, 2) = w.p;
  }
  return out;
}

void EulerProblem::rhs(const Vector& q, Vector& f) const {
  f.resize(size());
  const Index n = n_elem();
  // flux(i) is the interface between cells i-1 and i, i = 0..n.
  std::vector<Conserved> flux(static_cast<std::size_t>(n + 1));
  for (Index i = 0; i <= n; ++i) {
    flux[static_cast<std::size_t>(i)] = rusanov_flux(cell(q, neighbor(i - 1, 0)), cell(q, neighbor(i, 0)), gamma_);
  }
  for (Index i = 0; i < n; ++i) {
    const Conserved& fm = flux[static_cast<std::size_t>(i)];
    const Conserved& fp = flux[static_cast<std::size_t>(i + 1)];
    for (std::size_t v = 0; v < 3; ++v) f(3 * i + static_cast<Index>(v)) = -(fp[v] - fm[v]) / dx();
  }
}

void EulerProblem::rhs_rows(const Vector& q, std::span<const Index> rows, Vector& out) const {
  out.resize(static_cast<Index>(rows.size()));
  Index cached = -1;
  Conserved fm{}, fp{};
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index c = rows[k] / 3;
    const auto v = static_cast<std::size_t>(rows[k] % 3);
    if (c != cached) {
      const Conserved uc = cell(q, c);
      fm = rusanov_flux(cell(q, neighbor(c, -1)), uc, gamma_);
      fp = rusanov_flux(uc, cell(q, neighbor(c, 1)), gamma_);
      cached = c;
    }
    out(static_cast<Index>(k)) = -(fp[v] - fm[v]) / dx();
  }
}

// ---------------------------------------------------------------------------
// Jacobians and stepping

namespace {

/// Greedy coloring of cells such that cells sharing a color have disjoint
/// residual footprints (distance > 2 * stencil radius, cyclic if periodic).
std::vector<std::vector<Index>> color_cells(const FomProblem& model) {
  const Index n = model.n_elem();
  const Index reach = 2 * model.stencil_radius();
  std::vector<int> color(static_cast<std::size_t>(n), -1);
  int n_colors = 0;
  for (Index c = 0; c < n; ++c) {
    std::vector<bool> used(static_cast<std::size_t>(2 * reach + 2), false);
    for (Index off = -reach; off <= reach; ++off) {
      if (off == 0) continue;
      Index d = c + off;
      if (model.boundary() == Boundary::Periodic) {
        d = ((d % n) + n) % n;
      } else if (d < 0 || d >= n) {
        continue;
      }
      const int k = color[static_cast<std::size_t>(d)];
      if (k >= 0 && k < static_cast<int>(used.size())) used[static_cast<std::size_t>(k)] = true;
    }
    int k = 0;
    while (used[static_cast<std::size_t>(k)]) ++k;
    color[static_cast<std::size_t>(c)] = k;
    n_colors = std::max(n_colors, k + 1);
  }
  std::vector<std::vector<Index>> groups(static_cast<std::size_t>(n_colors));
  for (Index c = 0; c < n; ++c) groups[static_cast<std::size_t>(color[static_cast<std::size_t>(c)])].push_back(c);
  return groups;
}

template <class Sink>
void for_each_fd_entry(const FomProblem& model, const Vector& q, Sink&& sink) {
  const Index nv = model.n_var();
  const Index radius = model.stencil_radius();
  const Vector f0 = model.rhs(q);
  Vector qp = q;
  Vector fp(model.size());
  for (const auto& group : color_cells(model)) {
    for (Index v = 0; v < nv; ++v) {
      for (Index c : group) {
        const Index j = c * nv + v;
        qp(j) = q(j) + 1e-7 * std::max(1.0, std::abs(q(j)));
      }
      model.rhs(qp, fp);
      for (Index c : group) {
        const Index j = c * nv + v;
        const double h = qp(j) - q(j);
        for (Index off = -radius; off <= radius; ++off) {
          const Index cc = model.neighbor(c, off);
          if (off != 0 && cc == c) continue;  // clamped ghost
          for (Index w = 0; w < nv; ++w) {
            const Index row = cc * nv + w;
            sink(row, j, (fp(row) - f0(row)) / h);
          }
        }
        qp(j) = q(j);
      }
    }
  }
}

Index half_bandwidth(const FomProblem& model) { return (model.stencil_radius() + 1) * model.n_var() - 1; }

/// Solves (I - dt J_f) delta = -r with LAPACK banded LU (partial pivoting).
Vector banded_newton_step(const FomProblem& model, const Vector& q, double dt, const Vector& r, int iteration) {
  const Index n = model.size();
  const Index kl = half_bandwidth(model);
  const Index ku = kl;
  const Index ldab = 2 * kl + ku + 1;
  std::vector<double> ab(static_cast<std::size_t>(ldab * n), 0.0);
  auto at = [&](Index i, Index j) -> double& {
    return ab[static_cast<std::size_t>(j * ldab + kl + ku + i - j)];
  };
  for (Index j = 0; j < n; ++j) at(j, j) = 1.0;
  for_each_fd_entry(model, q, [&](Index row, Index col, double value) { at(row, col) -= dt * value; });
  Vector rhs = -r;
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(n));
  const lapack_int info =
      LAPACKE_dgbsv(LAPACK_COL_MAJOR, static_cast<lapack_int>(n), static_cast<lapack_int>(kl),
                    static_cast<lapack_int>(ku), 1, ab.data(), static_cast<lapack_int>(ldab), ipiv.data(),
                    rhs.data(), static_cast<lapack_int>(n));
  if (info != 0 || !rhs.allFinite()) {
    fail(ErrorKind::Solver, "newton_solve: singular banded Jacobian at iteration " + std::to_string(iteration) +
                                " (dgbsv info " + std::to_string(info) + ")");
  }
  return rhs;
}

/// Solves (I - dt J_f) delta = -r with a sparse LU; works for periodic models.
Vector sparse_newton_step(const FomProblem& model, const Vector& q, double dt, const Vector& r, int iteration) {
  const Index n = model.size();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(n * (half_bandwidth(model) * 2 + 2)));
  for (Index j = 0; j < n; ++j) entries.emplace_back(j, j, 1.0);
  for_each_fd_entry(model, q, [&](Index row, Index col, double value) { entries.emplace_back(row, col, -dt * value); });
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(entries.begin(), entries.end());  // duplicates are summed
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  Vector delta;
  if (lu.info() == Eigen::Success) delta = lu.solve(-r);
  if (lu.info() != Eigen::Success || !delta.allFinite()) {
    fail(ErrorKind::Solver, "newton_solve: singular sparse Jacobian at iteration " + std::to_string(iteration));
  }
  return delta;
}

}  // namespace

Matrix fd_jacobian(const FomProblem& model, const Vector& q) {
  Matrix j = Matrix::Zero(model.size(), model.size());
  for_each_fd_entry(model, q, [&](Index row, Index col, double value) { j(row, col) = value; });
  return j;
}

StepResult implicit_step(const FomProblem& model, const Vector& q, const TimeStepper& stepper) {
  if (!(stepper.dt > 0.0)) fail(ErrorKind::Argument, "implicit_step: dt must be positive");
  if (q.size() != model.size()) fail(ErrorKind::Argument, "implicit_step: state length mismatch");
  const double dt = stepper.dt;
  Vector f(model.size());
  auto residual = [&](const Vector& x) {
    model.rhs(x, f);
    return Vector(x - q - dt * f);
  };
  NewtonStepFn step;
  if (stepper.solver == LinearSolver::Banded) {
    if (model.boundary() == Boundary::Periodic) {
      fail(ErrorKind::Argument, "implicit_step: banded solver needs a non-periodic model");
    }
    step = [&](const Vector& x, const Vector& r, int it) { return banded_newton_step(model, x, dt, r, it); };
  } else if (stepper.solver == LinearSolver::Sparse) {
    step = [&](const Vector& x, const Vector& r, int it) { return sparse_newton_step(model, x, dt, r, it); };
  } else {
    step = [&](const Vector& x, const Vector& r, int it) {
      Matrix j = fd_jacobian(model, x);
      j *= -dt;
      j.diagonal().array() += 1.0;
      return dense_newton_step(j, r, it);
    };
  }
  const NewtonResult res =
      newton_solve_with(residual, step, q, NewtonOptions{stepper.newton_tol, stepper.newton_max_iter});
  return {res.x, res.converged, res.iterations, res.residual_norm};
}

StepResult coarse_step(const FomProblem& model, const Vector& y, int z, const TimeStepper& stepper) {
  if (z < 1) fail(ErrorKind::Argument, "coarse_step: z must be >= 1");
  TimeStepper coarse = stepper;
  coarse.dt = stepper.dt * static_cast<double>(z);
  return implicit_step(model, y, coarse);
}

}  // namespace isvdrom
