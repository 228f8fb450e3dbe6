#include "isvdrom/dense_numerics.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace isvdrom {

namespace {

void require_finite(const Matrix& a, const char* where) {
  if (!a.allFinite()) fail(ErrorKind::Argument, std::string(where) + ": non-finite entries in input");
}

}  // namespace

SvdResult thin_svd(const Matrix& a) {
  if (a.rows() < 1 || a.cols() < 1) fail(ErrorKind::Argument, "thin_svd: empty matrix");
  require_finite(a, "thin_svd");
  Eigen::JacobiSVD<Matrix, Eigen::ColPivHouseholderQRPreconditioner> svd(
      a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    fail(ErrorKind::Numerical, "thin_svd: two-sided Jacobi sweep did not converge (" +
                                   std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + ")");
  }
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

SvdResult graded_svd(const Matrix& a) {
  if (a.rows() < 1 || a.cols() < 1) fail(ErrorKind::Argument, "graded_svd: empty matrix");
  require_finite(a, "graded_svd");
  // dgesvj needs rows >= cols; for wide input the left vectors of a are the
  // right vectors of its transpose.
  const bool wide = a.rows() < a.cols();
  Matrix work = wide ? Matrix(a.transpose()) : a;
  const Index m = work.rows();
  const Index n = work.cols();
  Vector sva(n);
  Matrix v = wide ? Matrix(n, n) : Matrix(1, 1);
  double stat[6] = {};
  const lapack_int info = LAPACKE_dgesvj(LAPACK_COL_MAJOR, 'G', wide ? 'N' : 'U', wide ? 'V' : 'N',
                                         static_cast<lapack_int>(m), static_cast<lapack_int>(n), work.data(),
                                         static_cast<lapack_int>(m), sva.data(), 0, v.data(),
                                         static_cast<lapack_int>(v.rows()), stat);
  if (info < 0) fail(ErrorKind::Argument, "graded_svd: dgesvj argument " + std::to_string(-info));
  if (info > 0) fail(ErrorKind::Numerical, "graded_svd: one-sided Jacobi did not converge");

  Matrix u = wide ? v : work;  // rows(a) x n
  Vector s = stat[0] * sva;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return s(i) > s(j); });

  const Index k = std::min(a.rows(), a.cols());
  SvdResult out;
  out.U.resize(a.rows(), k);
  out.S.resize(k);
  Index filled = 0;
  for (Index idx = 0; idx < k; ++idx) {
    const Index j = order[static_cast<std::size_t>(idx)];
    out.S(idx) = std::max(s(j), 0.0);
    // Vectors of underflowed values are not computed by dgesvj.
    if (filled == idx && s(j) > 0.0 && std::abs(u.col(j).norm() - 1.0) < 1e-8) out.U.col(filled++) = u.col(j);
  }
  // Complete with coordinate directions orthogonalised against what is kept.
  for (Index e = 0; filled < k && e < a.rows(); ++e) {
    Vector c = Vector::Unit(a.rows(), e);
    for (int pass = 0; pass < 2; ++pass) c -= out.U.leftCols(filled) * (out.U.leftCols(filled).transpose() * c);
    const double norm = c.norm();
    if (norm > 1e-6) out.U.col(filled++) = c / norm;
  }
  return out;
}

PivotedQr pivoted_qr(const Matrix& a, Index k) {
  const Index m = a.rows();
  const Index n = a.cols();
  if (k < 0 || k > n) {
    fail(ErrorKind::Argument, "pivoted_qr: k=" + std::to_string(k) + " exceeds column count " +
                                  std::to_string(n));
  }
  require_finite(a, "pivoted_qr");

  Matrix work = a;
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::vector<Vector> reflectors;
  std::vector<double> betas;

  PivotedQr out;
  for (Index j = 0; j < k; ++j) {
    if (j >= m) {
      fail(ErrorKind::Numerical, "pivoted_qr: rank deficiency at pivot step " + std::to_string(j) +
                                     " (only " + std::to_string(m) + " rows)");
    }
    Index best = j;
    double best_norm = -1.0;
    for (Index c = j; c < n; ++c) {
      const double nrm = work.col(c).tail(m - j).norm();
      if (nrm > best_norm || (nrm == best_norm && perm[c] < perm[best])) {
        best_norm = nrm;
        best = c;
      }
    }
    if (best_norm < 1e-14) {
      fail(ErrorKind::Numerical, "pivoted_qr: rank deficiency at pivot step " + std::to_string(j) +
                                     " (largest residual column norm " + std::to_string(best_norm) + ")");
    }
    if (best != j) {
      work.col(j).swap(work.col(best));
      std::swap(perm[j], perm[best]);
    }
    out.pivots.push_back(perm[j]);
    out.pivot_norms.push_back(best_norm);

    Vector v = work.col(j).tail(m - j);
    const double alpha = v(0) >= 0.0 ? -best_norm : best_norm;
    v(0) -= alpha;
    const double vv = v.squaredNorm();
    const double beta = vv > 0.0 ? 2.0 / vv : 0.0;
    if (beta != 0.0) {
      auto block = work.block(j, j, m - j, n - j);
      const Eigen::RowVectorXd vtw = v.transpose() * block;
      block.noalias() -= beta * v * vtw;
    }
    work(j, j) = alpha;
    work.col(j).tail(m - j - 1).setZero();
    reflectors.push_back(std::move(v));
    betas.push_back(beta);
  }

  out.Q = Matrix::Identity(m, k);
  for (Index j = k - 1; j >= 0; --j) {
    const Vector& v = reflectors[static_cast<std::size_t>(j)];
    const double beta = betas[static_cast<std::size_t>(j)];
    if (beta == 0.0) continue;
    auto block = out.Q.bottomRows(m - j);
    const Eigen::RowVectorXd vtq = v.transpose() * block;
    block.noalias() -= beta * v * vtq;
  }
  out.R = work.topRows(k).triangularView<Eigen::Upper>();
  return out;
}

Vector least_squares(const Matrix& a, const Vector& b) {
  if (a.rows() < a.cols()) {
    fail(ErrorKind::Argument, "least_squares: underdetermined system (" + std::to_string(a.rows()) +
                                  " rows < " + std::to_string(a.cols()) + " cols)");
  }
  if (a.rows() != b.size()) fail(ErrorKind::Argument, "least_squares: right-hand side length mismatch");
  require_finite(a, "least_squares");
  Eigen::JacobiSVD<Matrix, Eigen::ColPivHouseholderQRPreconditioner> svd(
      a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kPinvCutoff);
  return svd.solve(b);
}

Matrix pseudo_inverse(const Matrix& a) {
  const SvdResult svd = thin_svd(a);
  const double cutoff = svd.S.size() > 0 ? kPinvCutoff * svd.S(0) : 0.0;
  Vector inv = Vector::Zero(svd.S.size());
  for (Index i = 0; i < svd.S.size(); ++i) {
    if (svd.S(i) > cutoff) inv(i) = 1.0 / svd.S(i);
  }
  return svd.V * inv.asDiagonal() * svd.U.transpose();
}

Vector principal_angles(const Matrix& u, const Matrix& v) {
  if (u.rows() != v.rows()) fail(ErrorKind::Argument, "principal_angles: row count mismatch");
  // `wide` spans at least as many directions as `narrow`.
  const bool swap = u.cols() < v.cols();
  const Matrix& wide = swap ? v : u;
  const Matrix& narrow = swap ? u : v;
  const Index k = narrow.cols();
  if (k == 0) return Vector{};

  const Matrix overlap = wide.transpose() * narrow;
  const Vector cosines = thin_svd(overlap).S;  // descending
  const Matrix perp = narrow - wide * overlap;
  const Vector sines = thin_svd(perp).S;  // descending

  // Cosines resolve large angles, sines resolve small ones.
  Vector angles(k);
  for (Index i = 0; i < k; ++i) {
    const double c = std::clamp(cosines(i), 0.0, 1.0);
    const double s = std::clamp(sines(k - 1 - i), 0.0, 1.0);
    angles(i) = c * c < 0.5 ? std::acos(c) : std::asin(s);
  }
  std::sort(angles.data(), angles.data() + k);
  return angles;
}

void normalize_column_signs(Matrix& a) {
  for (Index j = 0; j < a.cols(); ++j) {
    Index imax = 0;
    a.col(j).cwiseAbs().maxCoeff(&imax);
    if (a(imax, j) < 0.0) a.col(j) *= -1.0;
  }
}

Matrix orthonormalize(const Matrix& a) {
  if (a.rows() < a.cols()) fail(ErrorKind::Argument, "orthonormalize: more columns than rows");
  require_finite(a, "orthonormalize");
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
  normalize_column_signs(q);
  return q;
}

double orthonormality_defect(const Matrix& a) {
  return (a.transpose() * a - Matrix::Identity(a.cols(), a.cols())).norm();
}

Vector dense_newton_step(const Matrix& j, const Vector& r, int iteration) {
  if (!j.allFinite()) {
    fail(ErrorKind::Solver, "newton_solve: non-finite Jacobian at iteration " + std::to_string(iteration));
  }
  Eigen::PartialPivLU<Matrix> lu(j);
  const double rcond = lu.rcond();
  Vector delta = lu.solve(-r);
  if (!(rcond > 1e-15) || !delta.allFinite()) {
    fail(ErrorKind::Solver, "newton_solve: singular Jacobian at iteration " + std::to_string(iteration) +
                                " (rcond " + std::to_string(rcond) + ")");
  }
  return delta;
}

NewtonResult newton_solve_with(const ResidualFn& residual, const NewtonStepFn& step, const Vector& x0,
                               const NewtonOptions& options) {
  if (!(options.tol > 0.0)) fail(ErrorKind::Argument, "newton_solve: tolerance must be positive");
  NewtonResult out;
  out.x = x0;
  Vector r = residual(out.x);
  out.residual_norm = r.norm();
  for (int it = 0;; ++it) {
    if (out.residual_norm <= options.tol) {
      out.converged = true;
      break;
    }
    if (it >= options.max_iter) break;
    out.x += step(out.x, r, it);
    ++out.iterations;
    r = residual(out.x);
    out.residual_norm = r.norm();
    if (!std::isfinite(out.residual_norm)) {
      fail(ErrorKind::Solver, "newton_solve: residual became non-finite at iteration " + std::to_string(it));
    }
  }
  return out;
}

NewtonResult newton_solve(const ResidualFn& residual, const JacobianFn& jacobian, const Vector& x0,
                          const NewtonOptions& options) {
  return newton_solve_with(
      residual,
      [&](const Vector& x, const Vector& r, int it) { return dense_newton_step(jacobian(x), r, it); }, x0,
      options);
}

}  // namespace isvdrom
