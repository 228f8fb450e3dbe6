#include "isvdrom/snapshots.hpp"

#include <string>

namespace isvdrom {

ScalingTransform::ScalingTransform(Vector q_ref, Vector phi_norm)
    : q_ref_(std::move(q_ref)), phi_norm_(std::move(phi_norm)) {
  if (phi_norm_.size() < 1) fail(ErrorKind::Argument, "ScalingTransform: need at least one variable");
  if (q_ref_.size() % phi_norm_.size() != 0) {
    fail(ErrorKind::Argument, "ScalingTransform: state length is not a multiple of the variable count");
  }
  if ((phi_norm_.array() <= 0.0).any()) fail(ErrorKind::Argument, "ScalingTransform: phi_norm must be positive");
  inv_norm_ = phi_norm_.cwiseInverse();
}

ScalingTransform ScalingTransform::identity(Index size, Index n_var) {
  return ScalingTransform(Vector::Zero(size), Vector::Ones(n_var));
}

Vector ScalingTransform::d_diagonal() const {
  return inv_norm_.replicate(size() / n_var(), 1);
}

Vector ScalingTransform::preprocess(const Vector& q) const {
  if (q.size() != size()) fail(ErrorKind::Argument, "preprocess: state length mismatch");
  return d_diagonal().cwiseProduct(q - q_ref_);
}

Vector ScalingTransform::lift(const Vector& y_hat) const {
  if (y_hat.size() != size()) fail(ErrorKind::Argument, "lift: state length mismatch");
  return q_ref_ + phi_norm_.replicate(size() / n_var(), 1).cwiseProduct(y_hat);
}

ScalingTransform fit_scaling(std::span<const Vector> training, Index n_var) {
  if (training.empty()) fail(ErrorKind::Argument, "fit_scaling: no training snapshots");
  if (n_var < 1) fail(ErrorKind::Argument, "fit_scaling: n_var must be >= 1");
  const Vector& q_ref = training.front();
  const Index n = q_ref.size();
  if (n % n_var != 0) fail(ErrorKind::Argument, "fit_scaling: state length is not a multiple of n_var");
  const Index n_elem = n / n_var;

  Vector sums = Vector::Zero(n_var);
  for (const Vector& q : training) {
    if (q.size() != n) fail(ErrorKind::Argument, "fit_scaling: snapshot length mismatch");
    const Vector centered = q - q_ref;
    const auto per_cell = centered.reshaped(n_var, n_elem);
    sums += per_cell.array().square().matrix().rowwise().sum();
  }
  Vector phi_norm = sums / static_cast<double>(n_elem * static_cast<Index>(training.size()));
  for (Index v = 0; v < n_var; ++v) {
    if (!(phi_norm(v) > kScalingFloor)) phi_norm(v) = 1.0;
  }
  return ScalingTransform(q_ref, phi_norm);
}

Matrix preprocess_all(std::span<const Vector> snapshots, const ScalingTransform& scaling) {
  Matrix y(scaling.size(), static_cast<Index>(snapshots.size()));
  for (std::size_t i = 0; i < snapshots.size(); ++i) y.col(static_cast<Index>(i)) = scaling.preprocess(snapshots[i]);
  return y;
}

ReducedBasis pod(const Matrix& snapshots, Index r) {
  if (r < 1 || r > std::min(snapshots.rows(), snapshots.cols())) {
    fail(ErrorKind::Argument, "pod: r=" + std::to_string(r) + " outside [1, min(N, n_cols)]");
  }
  const SvdResult svd = thin_svd(snapshots);
  Index rank = 0;
  if (svd.S(0) > 0.0) {
    while (rank < svd.S.size() && svd.S(rank) > kPinvCutoff * svd.S(0)) ++rank;
  }
  if (r > rank) {
    fail(ErrorKind::Numerical, "pod: requested rank " + std::to_string(r) + " exceeds numerical rank " +
                                   std::to_string(rank) + " of the snapshot matrix");
  }
  ReducedBasis basis{svd.U.leftCols(r), svd.S.head(r)};
  normalize_column_signs(basis.phi);
  return basis;
}

}  // namespace isvdrom
