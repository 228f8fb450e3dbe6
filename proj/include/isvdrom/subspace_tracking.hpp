#pragma once

// Online basis-update rules operating on preprocessed correction snapshots.

#include <deque>
#include <span>
#include <string>

#include "isvdrom/reduced_basis.hpp"

namespace isvdrom {

/// Ring buffer of the most recent preprocessed snapshots, oldest first.
class SnapshotWindow {
 public:
  explicit SnapshotWindow(Index capacity);

  Index capacity() const { return capacity_; }
  Index size() const { return static_cast<Index>(columns_.size()); }
  bool empty() const { return columns_.empty(); }

  /// Appends `y_hat`, discarding the oldest column once full.
  void push(const Vector& y_hat);
  /// N x size() matrix, oldest column first.
  Matrix matrix() const;

  /// Window seeded with the last min(capacity, size) entries of `offline`.
  static SnapshotWindow from_offline(Index capacity, std::span<const Vector> offline);

 private:
  Index capacity_;
  std::deque<Vector> columns_;
};

enum class RuleKind { Isvd, WindowedSvd, Direct, OneStep, Oja, Grouse };

struct UpdateRule {
  RuleKind kind = RuleKind::Isvd;
  double lambda = 1.0;  ///< forgetting factor (iSVD)
  Index window = 8;     ///< window length (windowed SVD, Direct)
  double eta = 0.01;    ///< learning rate (Oja, GROUSE)

  /// Checks hyperparameter ranges; throws ErrorKind::Config.
  void validate() const;
};

std::string rule_name(RuleKind kind);
RuleKind parse_rule(const std::string& name);

/// iSVD, windowed SVD and Direct consume the newest lookahead snapshot;
/// the remaining rules react to the previous one.
bool is_history_aware(RuleKind kind);
bool uses_window(RuleKind kind);

/// Threshold under which a direction norm counts as zero.
inline constexpr double kDegenerateNorm = 1e-14;

struct IsvdStep {
  ReducedBasis basis;
  double residual_norm = 0.0;  ///< ||q_{k+1}||
  bool degenerate = false;     ///< new direction dropped (||q|| <= 1e-12 ||y_hat||)
};

/// Rank-r update of (Phi, sigma) with forgetting factor lambda through the
/// SVD of the (r+1) x (r+1) core matrix [[lambda Sigma, p], [0, ||q||]].
IsvdStep isvd_update(const ReducedBasis& basis, const Vector& y_hat, double lambda, Index r);

/// Leading r left singular pairs of the window matrix.
ReducedBasis wsvd_update(const SnapshotWindow& window, Index r);

/// orth(Y (Phi^T Y)^+); sigma carried over unchanged.
ReducedBasis direct_update(const ReducedBasis& basis, const SnapshotWindow& window);

struct InstantStep {
  ReducedBasis basis;
  bool skipped = false;
  std::string note;
};

/// orth(Phi + (y - Phi a)(a^T) / ||a||^2). Skipped when ||a|| < kDegenerateNorm.
InstantStep onestep_update(const ReducedBasis& basis, const Vector& y_prev_hat, const Vector& a_minus);

/// orth(Phi + eta y (y^T Phi)).
InstantStep oja_update(const ReducedBasis& basis, const Vector& y_prev_hat, double eta);

/// Rank-one geodesic step on the Grassmannian. No re-orthonormalization of
/// the result; skipped when ||p||, ||r|| or ||w|| falls below kDegenerateNorm.
InstantStep grouse_update(const ReducedBasis& basis, const Vector& y_prev_hat, double eta);

}  // namespace isvdrom
