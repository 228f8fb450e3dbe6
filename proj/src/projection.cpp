#include "isvdrom/projection.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace isvdrom {

std::string projection_name(ProjectionKind kind) { return kind == ProjectionKind::Galerkin ? "galerkin" : "lspg"; }

ProjectionKind parse_projection(const std::string& name) {
  if (name == "galerkin") return ProjectionKind::Galerkin;
  if (name == "lspg") return ProjectionKind::Lspg;
  fail(ErrorKind::Config, "rom.projection: unknown projection '" + name + "' (galerkin|lspg)");
}

RomOperator::RomOperator(const FomProblem& model, ReducedBasis basis, ScalingTransform scaling, SamplingSet sampling,
                         ProjectionKind kind)
    : basis_(std::move(basis)), scaling_(std::move(scaling)), kind_(kind) {
  if (basis_.rows() != model.size() || scaling_.size() != model.size()) {
    fail(ErrorKind::Argument, "RomOperator: basis/scaling size does not match the model");
  }
  if (scaling_.n_var() != model.n_var()) fail(ErrorKind::Argument, "RomOperator: scaling variable count mismatch");
  sampling_ = stencil_closure(std::move(sampling), model);
  deim_pinv_ = build_deim_operator(basis_, sampling_);

  const auto nc = static_cast<Index>(sampling_.closure.size());
  phi_closure_.resize(nc, rank());
  ref_closure_.resize(nc);
  dinv_closure_.resize(nc);
  for (Index c = 0; c < nc; ++c) {
    const Index row = sampling_.closure[static_cast<std::size_t>(c)];
    phi_closure_.row(c) = basis_.phi.row(row);
    ref_closure_(c) = scaling_.q_ref()(row);
    dinv_closure_(c) = scaling_.d_inv(row);
  }
  phi_sampled_.resize(sampling_.size(), rank());
  d_sampled_.resize(sampling_.size());
  for (Index s = 0; s < sampling_.size(); ++s) {
    const Index row = sampling_.indices[static_cast<std::size_t>(s)];
    phi_sampled_.row(s) = basis_.phi.row(row);
    d_sampled_(s) = scaling_.d(row);
  }
}

Vector RomOperator::encode(const Vector& q) const {
  if (q.size() != state_size()) fail(ErrorKind::Argument, "encode: state length mismatch");
  return basis_.phi.transpose() * scaling_.preprocess(q);
}

Vector RomOperator::decode(const Vector& a) const {
  if (a.size() != rank()) fail(ErrorKind::Argument, "decode: reduced state length mismatch");
  return scaling_.lift(basis_.phi * a);
}

void RomOperator::decode_closure(const Vector& a, Vector& q) const {
  if (a.size() != rank()) fail(ErrorKind::Argument, "decode_closure: reduced state length mismatch");
  if (q.size() != state_size()) fail(ErrorKind::Argument, "decode_closure: workspace size mismatch");
  const Vector local = ref_closure_ + dinv_closure_.cwiseProduct(phi_closure_ * a);
  for (std::size_t c = 0; c < sampling_.closure.size(); ++c) q(sampling_.closure[c]) = local(static_cast<Index>(c));
}

Vector RomOperator::sampled_rhs(const FomProblem& model, const Vector& a, RomWorkspace& ws) const {
  decode_closure(a, ws.q);
  model.rhs_rows(ws.q, sampling_.indices, ws.f);
  return d_sampled_.cwiseProduct(ws.f);
}

RomWorkspace::RomWorkspace(Index state_size)
    : q(Vector::Constant(state_size, std::numeric_limits<double>::quiet_NaN())) {}

namespace {

using ReducedResidual = std::function<Vector(const Vector&)>;

// Forward differences along reduced coordinates, step 1e-7 max(1, |a_j|).
Matrix reduced_fd_jacobian(const ReducedResidual& residual, const Vector& a, const Vector& r0) {
  Matrix j(r0.size(), a.size());
  Vector ap = a;
  for (Index c = 0; c < a.size(); ++c) {
    const double h = 1e-7 * std::max(1.0, std::abs(a(c)));
    ap(c) = a(c) + h;
    j.col(c) = (residual(ap) - r0) / h;
    ap(c) = a(c);
  }
  return j;
}

void check_finite(const Vector& v, const char* where, int iteration) {
  if (!v.allFinite()) {
    fail(ErrorKind::Solver, std::string(where) + ": non-finite residual at iteration " + std::to_string(iteration));
  }
}

}  // namespace

RomStepResult galerkin_step(const RomOperator& op, const FomProblem& model, const Vector& a, double dt,
                            RomWorkspace& ws, const RomStepOptions& options) {
  if (!(dt > 0.0)) fail(ErrorKind::Argument, "galerkin_step: dt must be positive");
  const ReducedResidual residual = [&](const Vector& x) -> Vector {
    return x - a - dt * (op.deim_pinv() * op.sampled_rhs(model, x, ws));
  };

  RomStepResult out;
  out.a = a;
  Vector g = residual(out.a);
  check_finite(g, "galerkin_step", 0);
  out.residual_norm = g.norm();
  for (int it = 0;; ++it) {
    if (out.residual_norm <= options.tol) {
      out.converged = true;
      break;
    }
    if (it >= options.max_iter) break;
    const Matrix j = reduced_fd_jacobian(residual, out.a, g);
    const Vector delta = dense_newton_step(j, g, it);
    out.a += delta;
    ++out.iterations;
    g = residual(out.a);
    check_finite(g, "galerkin_step", it + 1);
    out.residual_norm = g.norm();
    if (delta.norm() <= options.step_tol * std::max(1.0, out.a.norm())) {
      out.converged = true;
      break;
    }
  }
  return out;
}

namespace {

// R(a_hat) = (P^T Phi)^+ P^T D r(q(a_hat)). On the sampled rows
// D (q(a_hat) - q(a_prev)) = P^T Phi (a_hat - a_prev) exactly.
Vector lspg_residual(const RomOperator& op, const FomProblem& model, const Vector& a_prev, const Vector& a_hat,
                     double dt, RomWorkspace& ws) {
  return op.deim_pinv() * (op.phi_sampled() * (a_hat - a_prev) - dt * op.sampled_rhs(model, a_hat, ws));
}

}  // namespace

double lspg_objective(const RomOperator& op, const FomProblem& model, const Vector& a_prev, const Vector& a_hat,
                      double dt, RomWorkspace& ws) {
  return lspg_residual(op, model, a_prev, a_hat, dt, ws).squaredNorm();
}

RomStepResult lspg_step(const RomOperator& op, const FomProblem& model, const Vector& a, double dt, RomWorkspace& ws,
                        const RomStepOptions& options) {
  if (!(dt > 0.0)) fail(ErrorKind::Argument, "lspg_step: dt must be positive");
  const ReducedResidual residual = [&](const Vector& x) -> Vector {
    return lspg_residual(op, model, a, x, dt, ws);
  };

  RomStepResult out;
  out.a = a;
  Vector res = residual(out.a);
  check_finite(res, "lspg_step", 0);
  for (int it = 0;; ++it) {
    const Matrix j = reduced_fd_jacobian(residual, out.a, res);
    out.residual_norm = (j.transpose() * res).norm();
    if (out.residual_norm <= options.tol) {
      out.converged = true;
      break;
    }
    if (it >= options.max_iter) break;
    const SvdResult svd = thin_svd(j);
    const double smin = svd.S(svd.S.size() - 1);
    if (!(smin > kPinvCutoff * svd.S(0))) {
      std::ostringstream msg;
      msg << "lspg_step: rank-deficient sampled Jacobian at iteration " << it << " (condition estimate "
          << svd.S(0) / smin << ")";
      fail(ErrorKind::Solver, msg.str());
    }
    const Vector delta = -(svd.V * (svd.S.cwiseInverse().asDiagonal() * (svd.U.transpose() * res)));
    out.a += delta;
    ++out.iterations;
    res = residual(out.a);
    check_finite(res, "lspg_step", it + 1);
    if (delta.norm() <= options.step_tol * std::max(1.0, out.a.norm())) {
      out.residual_norm = (reduced_fd_jacobian(residual, out.a, res).transpose() * res).norm();
      out.converged = true;
      break;
    }
  }
  return out;
}

RomStepResult rom_step(const RomOperator& op, const FomProblem& model, const Vector& a, double dt, RomWorkspace& ws,
                       const RomStepOptions& options) {
  return op.kind() == ProjectionKind::Galerkin ? galerkin_step(op, model, a, dt, ws, options)
                                               : lspg_step(op, model, a, dt, ws, options);
}

}  // namespace isvdrom
