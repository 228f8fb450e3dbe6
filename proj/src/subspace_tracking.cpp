#include "isvdrom/subspace_tracking.hpp"

#include <cmath>
#include <sstream>

namespace isvdrom {

SnapshotWindow::SnapshotWindow(Index capacity) : capacity_(capacity) {
  if (capacity < 1) fail(ErrorKind::Argument, "SnapshotWindow: capacity must be >= 1");
}

void SnapshotWindow::push(const Vector& y_hat) {
  if (!columns_.empty() && y_hat.size() != columns_.front().size()) {
    fail(ErrorKind::Argument, "SnapshotWindow: snapshot length mismatch");
  }
  columns_.push_back(y_hat);
  while (size() > capacity_) columns_.pop_front();
}

Matrix SnapshotWindow::matrix() const {
  if (columns_.empty()) fail(ErrorKind::Argument, "SnapshotWindow: window is empty");
  Matrix out(columns_.front().size(), size());
  for (Index j = 0; j < size(); ++j) out.col(j) = columns_[static_cast<std::size_t>(j)];
  return out;
}

SnapshotWindow SnapshotWindow::from_offline(Index capacity, std::span<const Vector> offline) {
  SnapshotWindow w(capacity);
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(capacity), offline.size());
  for (std::size_t i = offline.size() - keep; i < offline.size(); ++i) w.push(offline[i]);
  return w;
}

void UpdateRule::validate() const {
  switch (kind) {
    case RuleKind::Isvd:
      if (!(lambda >= 0.0 && lambda <= 1.0)) fail(ErrorKind::Config, "rule.lambda must lie in [0, 1]");
      break;
    case RuleKind::WindowedSvd:
    case RuleKind::Direct:
      if (window < 1) fail(ErrorKind::Config, "rule.window must be >= 1");
      break;
    case RuleKind::Oja:
    case RuleKind::Grouse:
      if (!(eta > 0.0)) fail(ErrorKind::Config, "rule.eta must be > 0");
      break;
    case RuleKind::OneStep:
      break;
  }
}

std::string rule_name(RuleKind kind) {
  switch (kind) {
    case RuleKind::Isvd: return "isvd";
    case RuleKind::WindowedSvd: return "wsvd";
    case RuleKind::Direct: return "direct";
    case RuleKind::OneStep: return "onestep";
    case RuleKind::Oja: return "oja";
    case RuleKind::Grouse: return "grouse";
  }
  return "unknown";
}

RuleKind parse_rule(const std::string& name) {
  for (RuleKind k : {RuleKind::Isvd, RuleKind::WindowedSvd, RuleKind::Direct, RuleKind::OneStep, RuleKind::Oja,
                     RuleKind::Grouse}) {
    if (rule_name(k) == name) return k;
  }
  fail(ErrorKind::Config, "rule.kind: unknown rule '" + name + "' (isvd|wsvd|direct|onestep|oja|grouse)");
}

bool is_history_aware(RuleKind kind) {
  return kind == RuleKind::Isvd || kind == RuleKind::WindowedSvd || kind == RuleKind::Direct;
}

bool uses_window(RuleKind kind) { return kind == RuleKind::WindowedSvd || kind == RuleKind::Direct; }

namespace {

void check_shapes(const ReducedBasis& basis, const Vector& y, const char* where) {
  if (basis.rank() < 1) fail(ErrorKind::Argument, std::string(where) + ": empty basis");
  if (y.size() != basis.rows()) fail(ErrorKind::Argument, std::string(where) + ": snapshot length mismatch");
  if (!y.allFinite()) fail(ErrorKind::Argument, std::string(where) + ": non-finite snapshot");
}

}  // namespace

IsvdStep isvd_update(const ReducedBasis& basis, const Vector& y_hat, double lambda, Index r) {
  check_shapes(basis, y_hat, "isvd_update");
  const Index k = basis.rank();
  if (basis.sigma.size() != k) fail(ErrorKind::Argument, "isvd_update: sigma length mismatch");
  if (r < 1 || r > k + 1) fail(ErrorKind::Argument, "isvd_update: target rank must lie in [1, rank + 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail(ErrorKind::Argument, "isvd_update: lambda must lie in [0, 1]");

  // Least-squares coefficients against the orthonormal basis, with a second
  // Gram-Schmidt pass so q stays orthogonal to range(Phi) at working precision.
  Vector p = basis.phi.transpose() * y_hat;
  Vector q = y_hat - basis.phi * p;
  const Vector p2 = basis.phi.transpose() * q;
  p += p2;
  q -= basis.phi * p2;
  const double q_norm = q.norm();

  IsvdStep out;
  out.residual_norm = q_norm;
  out.degenerate = !(q_norm > 1e-12 * y_hat.norm());

  if (out.degenerate) {
    Matrix core(k, k + 1);
    core.leftCols(k) = lambda * basis.sigma.asDiagonal();
    core.col(k) = p;
    const SvdResult svd = graded_svd(core);
    const Index keep = std::min(r, k);
    out.basis.phi = basis.phi * svd.U.leftCols(keep);
    out.basis.sigma = svd.S.head(keep);
    return out;
  }

  Matrix core = Matrix::Zero(k + 1, k + 1);
  core.topLeftCorner(k, k) = lambda * basis.sigma.asDiagonal();
  core.topRightCorner(k, 1) = p;
  core(k, k) = q_norm;
  // With small lambda the core is strongly column-graded (weights lambda^j
  // after j events); a plain SVD would turn the trailing directions into noise.
  const SvdResult svd = graded_svd(core);
  out.basis.phi = basis.phi * svd.U.topLeftCorner(k, r) + (q / q_norm) * svd.U.bottomLeftCorner(1, r);
  out.basis.sigma = svd.S.head(r);
  return out;
}

ReducedBasis wsvd_update(const SnapshotWindow& window, Index r) {
  const Matrix y = window.matrix();
  if (r < 1 || r > y.cols()) {
    fail(ErrorKind::Numerical, "wsvd_update: target rank " + std::to_string(r) + " exceeds window length " +
                                   std::to_string(y.cols()));
  }
  const SvdResult svd = thin_svd(y);
  if (!(svd.S(r - 1) > kPinvCutoff * svd.S(0))) {
    fail(ErrorKind::Numerical, "wsvd_update: window rank is below the target rank " + std::to_string(r));
  }
  ReducedBasis out{svd.U.leftCols(r), svd.S.head(r)};
  normalize_column_signs(out.phi);
  return out;
}

ReducedBasis direct_update(const ReducedBasis& basis, const SnapshotWindow& window) {
  const Matrix y = window.matrix();
  if (y.rows() != basis.rows()) fail(ErrorKind::Argument, "direct_update: snapshot length mismatch");
  const Index r = basis.rank();
  const Matrix z = basis.phi.transpose() * y;
  const Matrix phi_tilde = y * pseudo_inverse(z);
  const SvdResult check = thin_svd(phi_tilde);
  if (!(check.S(0) > 0.0) || !(check.S(r - 1) > kPinvCutoff * check.S(0))) {
    std::ostringstream msg;
    msg << "direct_update: updated basis has rank below " << r << " (window length " << y.cols()
        << ", smallest singular value " << check.S(r - 1) << ")";
    fail(ErrorKind::Numerical, msg.str());
  }
  return {orthonormalize(phi_tilde), basis.sigma};
}

InstantStep onestep_update(const ReducedBasis& basis, const Vector& y_prev_hat, const Vector& a_minus) {
  check_shapes(basis, y_prev_hat, "onestep_update");
  if (a_minus.size() != basis.rank()) fail(ErrorKind::Argument, "onestep_update: reduced state length mismatch");
  const double a2 = a_minus.squaredNorm();
  if (!(std::sqrt(a2) >= kDegenerateNorm)) return {basis, true, "onestep: ||a|| below threshold, update skipped"};
  const Vector residual = y_prev_hat - basis.phi * a_minus;
  const Matrix updated = basis.phi + residual * (a_minus.transpose() / a2);
  return {{orthonormalize(updated), basis.sigma}, false, {}};
}

InstantStep oja_update(const ReducedBasis& basis, const Vector& y_prev_hat, double eta) {
  check_shapes(basis, y_prev_hat, "oja_update");
  if (!(eta > 0.0)) fail(ErrorKind::Argument, "oja_update: eta must be > 0");
  const Eigen::RowVectorXd proj = y_prev_hat.transpose() * basis.phi;
  const Matrix updated = basis.phi + eta * y_prev_hat * proj;
  return {{orthonormalize(updated), basis.sigma}, false, {}};
}

InstantStep grouse_update(const ReducedBasis& basis, const Vector& y_prev_hat, double eta) {
  check_shapes(basis, y_prev_hat, "grouse_update");
  if (!(eta > 0.0)) fail(ErrorKind::Argument, "grouse_update: eta must be > 0");
  Vector w = basis.phi.transpose() * y_prev_hat;
  Vector res = y_prev_hat - basis.phi * w;
  const Vector w2 = basis.phi.transpose() * res;
  w += w2;
  res -= basis.phi * w2;
  const Vector p = basis.phi * w;
  const double p_norm = p.norm();
  const double r_norm = res.norm();
  const double w_norm = w.norm();
  if (p_norm < kDegenerateNorm || r_norm < kDegenerateNorm || w_norm < kDegenerateNorm) {
    return {basis, true, "grouse: degenerate geodesic direction, update skipped"};
  }
  const double alpha = eta * p_norm * r_norm;
  const Vector dir = (std::cos(alpha) - 1.0) * (p / p_norm) + std::sin(alpha) * (res / r_norm);
  return {{basis.phi + dir * (w.transpose() / w_norm), basis.sigma}, false, {}};
}

}  // namespace isvdrom
