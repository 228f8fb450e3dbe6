#pragma once

// Snapshot preprocessing (reference state + per-variable diagonal scaling)
// and batch POD.

#include <span>

#include "isvdrom/reduced_basis.hpp"

namespace isvdrom {

/// y_hat = D (q - q_ref) with D block-diagonal, each block
/// diag(1 / phi_norm_1, ..., 1 / phi_norm_nvar). Rows are variable-interleaved.
class ScalingTransform {
 public:
  ScalingTransform() = default;
  ScalingTransform(Vector q_ref, Vector phi_norm);

  /// q_ref = 0 and D = I.
  static ScalingTransform identity(Index size, Index n_var);

  const Vector& q_ref() const { return q_ref_; }
  const Vector& phi_norm() const { return phi_norm_; }
  Index n_var() const { return phi_norm_.size(); }
  Index size() const { return q_ref_.size(); }

  /// Diagonal of D at full-state row `row`.
  double d(Index row) const { return inv_norm_(row % n_var()); }
  /// Diagonal of D^{-1} at full-state row `row`.
  double d_inv(Index row) const { return phi_norm_(row % n_var()); }
  /// Full diagonal of D.
  Vector d_diagonal() const;

  Vector preprocess(const Vector& q) const;
  Vector lift(const Vector& y_hat) const;

 private:
  Vector q_ref_;
  Vector phi_norm_;
  Vector inv_norm_;
};

inline constexpr double kScalingFloor = 1e-30;

/// q_ref = first snapshot; phi_norm_v = mean over all snapshots and cells of
/// (q_v - q_ref_v)^2. Values at or below kScalingFloor are replaced by 1.
ScalingTransform fit_scaling(std::span<const Vector> training, Index n_var);

/// Columns D (q_i - q_ref).
Matrix preprocess_all(std::span<const Vector> snapshots, const ScalingTransform& scaling);

/// Leading r left singular vectors/values of the preprocessed snapshot
/// matrix, column signs normalized. Throws ErrorKind::Numerical when r
/// exceeds the numerical rank.
ReducedBasis pod(const Matrix& snapshots, Index r);

}  // namespace isvdrom
