#pragma once

// Small dense kernels shared by every module. Storage is Eigen's default
// column-major layout.

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "isvdrom/error.hpp"

namespace isvdrom {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative singular-value cutoff used for every pseudo-inverse and
/// minimum-norm solve.
inline constexpr double kPinvCutoff = 1e-12;

struct SvdResult {
  Matrix U;  ///< rows x k, orthonormal columns
  Vector S;  ///< k values, descending, nonnegative
  Matrix V;  ///< cols x k, orthonormal columns
};

/// Economy SVD, k = min(rows, cols).
SvdResult thin_svd(const Matrix& a);

/// Left singular vectors and values only, by one-sided Jacobi. Keeps high
/// relative accuracy for column-graded matrices (columns spanning many orders
/// of magnitude), where thin_svd resolves small singular values only to
/// eps * ||a||. Vectors of zero or underflowed values complete U to an
/// orthonormal set. V is left empty.
SvdResult graded_svd(const Matrix& a);

struct PivotedQr {
  std::vector<Index> pivots;        ///< first k pivot columns, in selection order
  std::vector<double> pivot_norms;  ///< residual norm of each selected column
  Matrix Q;                         ///< rows x k
  Matrix R;                         ///< k x cols, columns in pivoted order (pivots first)
};

/// Greedy Householder QR with column pivoting: at every step the remaining
/// column with the largest residual 2-norm is selected (ties go to the lowest
/// original column index). Throws ErrorKind::Numerical if the residual norms
/// drop below 1e-14 before k pivots are found.
PivotedQr pivoted_qr(const Matrix& a, Index k);

/// argmin ||a x - b||_2. Minimum-norm solution through the SVD with the
/// kPinvCutoff relative cutoff, so rank deficiency is handled silently.
Vector least_squares(const Matrix& a, const Vector& b);

/// Moore-Penrose pseudo-inverse with the kPinvCutoff relative cutoff.
Matrix pseudo_inverse(const Matrix& a);

/// Principal angles between range(u) and range(v), ascending. Both inputs
/// must have orthonormal columns and the same row count.
Vector principal_angles(const Matrix& u, const Matrix& v);

/// Flip column signs so the entry of largest magnitude in each column is
/// nonnegative.
void normalize_column_signs(Matrix& a);

/// Thin Householder QR factor Q of `a` with normalize_column_signs applied.
Matrix orthonormalize(const Matrix& a);

/// ||a^T a - I||_F
double orthonormality_defect(const Matrix& a);

struct NewtonOptions {
  double tol = 1e-8;
  int max_iter = 10;
};

struct NewtonResult {
  Vector x;
  bool converged = false;
  int iterations = 0;
  double residual_norm = 0.0;
};

using ResidualFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<Matrix(const Vector&)>;
/// Returns the Newton correction delta solving J(x) delta = -r.
using NewtonStepFn = std::function<Vector(const Vector& x, const Vector& r, int iteration)>;

/// Newton iteration with a dense partially pivoted LU solve per step.
/// Stops when ||residual(x)||_2 <= tol; after max_iter steps the last iterate
/// is returned with converged = false. A singular Jacobian throws
/// ErrorKind::Solver naming the iteration.
NewtonResult newton_solve(const ResidualFn& residual, const JacobianFn& jacobian,
                          const Vector& x0, const NewtonOptions& options = {});

/// Same iteration with a caller-supplied linear solve (e.g. banded storage).
NewtonResult newton_solve_with(const ResidualFn& residual, const NewtonStepFn& step,
                               const Vector& x0, const NewtonOptions& options = {});

/// Dense LU solve of j * delta = -r used by newton_solve.
Vector dense_newton_step(const Matrix& j, const Vector& r, int iteration);

}  // namespace isvdrom
