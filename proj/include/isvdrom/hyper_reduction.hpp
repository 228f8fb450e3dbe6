#pragma once

// Sampling-point selection (QDEIM, feature-guided) and the gappy
// reconstruction operator (P^T Phi)^+.

#include <functional>
#include <string>
#include <vector>

#include "isvdrom/fom.hpp"
#include "isvdrom/reduced_basis.hpp"

namespace isvdrom {

struct SamplingSet {
  /// Sampled full-state rows, selection order, no duplicates.
  std::vector<Index> indices;
  /// Sorted rows whose state values are needed to evaluate f at `indices`.
  /// Empty until stencil_closure is applied.
  std::vector<Index> closure;

  Index size() const { return static_cast<Index>(indices.size()); }
};

enum class FeatureKind { Pressure, Velocity, Custom };

struct FeatureMap {
  FeatureKind kind = FeatureKind::Pressure;
  /// Number of rows chosen by the feature criterion.
  Index n_extra = 0;
  /// Per-cell scalar field, used when kind == Custom.
  std::function<Vector(const FomProblem&, const Vector&)> custom;
};

/// Per-cell feature field theta(y).
Vector feature_field(const FomProblem& model, const Vector& y, const FeatureMap& feature);

/// |d theta / dx| per cell: central differences in the interior, wrapped on
/// periodic grids, one-sided at non-periodic ends.
Vector feature_gradient(const FomProblem& model, const Vector& theta);

/// Rows from pivoted QR of Phi^T. For n_s > r the selection repeats fresh
/// pivoted QR passes over the not-yet-chosen rows until n_s rows are taken.
SamplingSet qdeim_sample(const ReducedBasis& basis, Index n_s);

/// First n_s - n_extra rows from QDEIM, the rest from cells ranked by
/// feature-gradient magnitude (ties to the lowest cell). Each ranked cell
/// contributes its variable rows in order, skipping rows already chosen,
/// until exactly n_s rows are held.
SamplingSet fgs_sample(const ReducedBasis& basis, const FomProblem& model, const Vector& y_corr, Index n_s,
                       const FeatureMap& feature);

/// (P^T Phi)^+, r x n_s. Throws ErrorKind::Numerical if P^T Phi is
/// column-rank deficient.
Matrix build_deim_operator(const ReducedBasis& basis, const SamplingSet& sampling);

/// Returns `sampling` with `closure` set to every (cell, var) row within the
/// model's stencil radius of a sampled cell.
SamplingSet stencil_closure(SamplingSet sampling, const FomProblem& model);

}  // namespace isvdrom
