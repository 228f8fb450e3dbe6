#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "isvdrom/dense_numerics.hpp"
#include "test_support.hpp"

using namespace isvdrom;
using testing_support::gaussian;

TEST(ThinSvd, DiagonalMatrix) {
  Matrix a(2, 2);
  a << 3, 0, 0, 1;
  const SvdResult s = thin_svd(a);
  EXPECT_NEAR(s.S(0), 3.0, 1e-15);
  EXPECT_NEAR(s.S(1), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(s.U(0, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(s.U(1, 1)), 1.0, 1e-15);
}

TEST(ThinSvd, PermutationHasUnitValues) {
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  const SvdResult s = thin_svd(a);
  EXPECT_NEAR(s.S(0), 1.0, 1e-15);
  EXPECT_NEAR(s.S(1), 1.0, 1e-15);
  EXPECT_LT((s.U * s.S.asDiagonal() * s.V.transpose() - a).norm(), 1e-14);
}

TEST(ThinSvd, ValuesMatchGramEigenvalues) {
  std::mt19937_64 rng(1);
  const Matrix a = gaussian(5, 3, rng);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a.transpose() * a);
  const SvdResult s = thin_svd(a);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.S(i), std::sqrt(eig.eigenvalues()(2 - i)), 1e-12);
}

TEST(ThinSvd, ReconstructsRandomShapes) {
  std::mt19937_64 rng(2);
  for (auto [m, n] : {std::pair{200, 50}, std::pair{7, 19}, std::pair{40, 40}}) {
    const Matrix a = gaussian(m, n, rng);
    const SvdResult s = thin_svd(a);
    EXPECT_LE((s.U * s.S.asDiagonal() * s.V.transpose() - a).norm(), 1e-12 * a.norm());
    EXPECT_LE(orthonormality_defect(s.U), 1e-12);
    EXPECT_LE(orthonormality_defect(s.V), 1e-12);
    for (Index i = 1; i < s.S.size(); ++i) EXPECT_GE(s.S(i - 1), s.S(i));
  }
}

// Columns b_i w_i with w falling by 1e-8 per column. To first order the
// singular pairs are the Gram-Schmidt vectors of B with values w_i r_ii,
// corrections being O(1e-16) relative.
TEST(GradedSvd, ResolvesColumnGradedValuesToRelativeAccuracy) {
  std::mt19937_64 rng(3);
  const Matrix b = gaussian(9, 4, rng);
  const Vector w = (Vector(4) << 1.0, 1e-8, 1e-16, 1e-24).finished();
  const Matrix a = b * w.asDiagonal();

  Matrix q = b;
  Vector rdiag(4);
  for (Index j = 0; j < 4; ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (Index k = 0; k < j; ++k) q.col(j) -= q.col(k).dot(q.col(j)) * q.col(k);
    rdiag(j) = q.col(j).norm();
    q.col(j) /= rdiag(j);
  }

  const SvdResult s = graded_svd(a);
  ASSERT_EQ(s.S.size(), 4);
  for (Index j = 0; j < 4; ++j) {
    const double expected = w(j) * rdiag(j);
    EXPECT_NEAR(s.S(j) / expected, 1.0, 1e-10) << "value " << j;
    EXPECT_NEAR(std::abs(s.U.col(j).dot(q.col(j))), 1.0, 1e-12) << "vector " << j;
  }
  EXPECT_LE(orthonormality_defect(s.U), 1e-12);
}

TEST(GradedSvd, WideInputAndZeroColumns) {
  std::mt19937_64 rng(4);
  Matrix a = gaussian(3, 5, rng);
  const SvdResult s = graded_svd(a);
  const SvdResult ref = thin_svd(a);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(s.S(i), ref.S(i), 1e-12);

  Matrix z = Matrix::Zero(4, 2);
  z(1, 0) = 2.0;
  const SvdResult sz = graded_svd(z);
  EXPECT_NEAR(sz.S(0), 2.0, 1e-15);
  EXPECT_EQ(sz.S(1), 0.0);
  EXPECT_LE(orthonormality_defect(sz.U), 1e-14);
}

TEST(PivotedQr, CoordinateColumnsPickTheirRows) {
  Matrix phi = Matrix::Zero(10, 2);
  phi(3, 0) = 1.0;
  phi(7, 1) = 1.0;
  const PivotedQr qr = pivoted_qr(phi.transpose(), 2);
  ASSERT_EQ(qr.pivots.size(), 2u);
  EXPECT_EQ(qr.pivots[0], 3);
  EXPECT_EQ(qr.pivots[1], 7);
}

TEST(PivotedQr, SingleStepIsLargestColumn) {
  std::mt19937_64 rng(5);
  const Matrix a = gaussian(3, 12, rng);
  Index best = 0;
  a.colwise().norm().maxCoeff(&best);
  EXPECT_EQ(pivoted_qr(a, 1).pivots[0], best);
}

// Column norms 1, sqrt5, 4, sqrt10: column 2 first. Removing its direction
// e2 leaves residual norms 1, 2, -, 3, so column 3 is next.
TEST(PivotedQr, HandWorkedTwoByFour) {
  Matrix a(2, 4);
  a << 1, 2, 0, 3, 0, 1, 4, 1;
  const PivotedQr qr = pivoted_qr(a, 2);
  EXPECT_EQ(qr.pivots[0], 2);
  EXPECT_EQ(qr.pivots[1], 3);
  EXPECT_NEAR(qr.pivot_norms[0], 4.0, 1e-14);
  EXPECT_NEAR(qr.pivot_norms[1], 3.0, 1e-14);
}

TEST(PivotedQr, PivotNormsDecrease) {
  std::mt19937_64 rng(6);
  const Matrix a = gaussian(6, 30, rng);
  const PivotedQr qr = pivoted_qr(a, 6);
  for (size_t i = 1; i < qr.pivot_norms.size(); ++i) EXPECT_GE(qr.pivot_norms[i - 1], qr.pivot_norms[i] - 1e-14);
}

TEST(PivotedQr, RankDeficiencyThrows) {
  Matrix a = Matrix::Zero(3, 4);
  a(0, 1) = 1.0;
  EXPECT_THROW(pivoted_qr(a, 2), Error);
}

TEST(LeastSquares, ConsistentOrthonormalSystem) {
  std::mt19937_64 rng(7);
  const Matrix q = testing_support::random_orthonormal(8, 3, rng);
  const Vector x = gaussian(3, rng);
  EXPECT_LT((least_squares(q, q * x) - x).norm(), 1e-13);
}

TEST(LeastSquares, IdentityReturnsRightHandSide) {
  const Vector b = (Vector(3) << 1, -2, 5).finished();
  EXPECT_LT((least_squares(Matrix::Identity(3, 3), b) - b).norm(), 1e-15);
}

TEST(LeastSquares, MatchesNormalEquations) {
  Matrix a(4, 2);
  a << 1, 0, 1, 1, 1, 2, 1, 3;
  const Vector b = (Vector(4) << 1, 2, 2, 4).finished();
  // Normal equations by hand: [[4, 6], [6, 14]] x = [9, 18].
  const double det = 4.0 * 14.0 - 36.0;
  const Vector expected = (Vector(2) << (14.0 * 9.0 - 6.0 * 18.0) / det, (4.0 * 18.0 - 6.0 * 9.0) / det).finished();
  EXPECT_LT((least_squares(a, b) - expected).norm(), 1e-13);
}

TEST(PrincipalAngles, KnownConfigurations) {
  Matrix e1 = Matrix::Zero(3, 1), e2 = Matrix::Zero(3, 1), d = Matrix::Zero(3, 1);
  e1(0, 0) = 1;
  e2(1, 0) = 1;
  d(0, 0) = d(1, 0) = std::sqrt(0.5);
  EXPECT_NEAR(principal_angles(e1, e1)(0), 0.0, 1e-15);
  EXPECT_NEAR(principal_angles(e1, e2)(0), std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(principal_angles(e1, d)(0), std::numbers::pi / 4, 1e-15);
}

TEST(PrincipalAngles, TinyAnglesAreResolved) {
  Matrix u = Matrix::Zero(3, 1), v(3, 1);
  u(0, 0) = 1;
  const double t = 1e-10;
  v << std::cos(t), std::sin(t), 0;
  EXPECT_NEAR(principal_angles(u, v)(0), t, 1e-20);
}

TEST(Orthonormalize, SignConventionAndDefect) {
  std::mt19937_64 rng(8);
  const Matrix q = orthonormalize(gaussian(20, 5, rng));
  EXPECT_LE(orthonormality_defect(q), 1e-13);
  for (Index j = 0; j < q.cols(); ++j) {
    Index imax = 0;
    q.col(j).cwiseAbs().maxCoeff(&imax);
    EXPECT_GE(q(imax, j), 0.0);
  }
}

TEST(Newton, LinearResidualConvergesInOneStep) {
  const auto res = [](const Vector& x) { return x; };
  const auto jac = [](const Vector& x) { return Matrix::Identity(x.size(), x.size()).eval(); };
  const NewtonResult r = newton_solve(res, jac, Vector::Constant(3, 5.0));
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_LT(r.x.norm(), 1e-15);
}

TEST(Newton, SquareRootOfFourIsQuadratic) {
  const auto res = [](const Vector& x) { return (x.array().square() - 4.0).matrix().eval(); };
  const auto jac = [](const Vector& x) { return Matrix((2.0 * x).asDiagonal()); };
  const NewtonResult r = newton_solve(res, jac, Vector::Constant(1, 3.0));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x(0), 2.0, 1e-9);

  // e_{k+1} / e_k^2 tends to f''/(2 f') = 1/4 at the root.
  std::vector<double> err;
  for (int k = 1; k <= 4; ++k) {
    NewtonOptions opt;
    opt.tol = 1e-300;
    opt.max_iter = k;
    err.push_back(std::abs(newton_solve(res, jac, Vector::Constant(1, 3.0), opt).x(0) - 2.0));
  }
  for (size_t k = 1; k < err.size(); ++k) {
    if (err[k] < 1e-13) break;
    EXPECT_LT(err[k] / (err[k - 1] * err[k - 1]), 0.3);
  }
}

// x^2 + y^2 = 4, x = y. The root (sqrt2, sqrt2) is found independently by
// bisection on 2 x^2 - 4.
TEST(Newton, TwoByTwoSystemAgainstBisection) {
  const auto res = [](const Vector& v) {
    return (Vector(2) << v(0) * v(0) + v(1) * v(1) - 4.0, v(0) - v(1)).finished();
  };
  const auto jac = [](const Vector& v) { return (Matrix(2, 2) << 2 * v(0), 2 * v(1), 1, -1).finished(); };
  double lo = 0.0, hi = 3.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (2 * mid * mid - 4 > 0 ? hi : lo) = mid;
  }
  const NewtonResult r = newton_solve(res, jac, (Vector(2) << 1.0, 2.0).finished());
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x(0), lo, 1e-8);
  EXPECT_NEAR(r.x(1), lo, 1e-8);
}

TEST(Newton, NonConvergenceIsReported) {
  const auto res = [](const Vector& x) { return (x.array().square() + 1.0).matrix().eval(); };
  const auto jac = [](const Vector& x) { return Matrix((2.0 * x).asDiagonal()); };
  NewtonOptions opt;
  opt.max_iter = 5;
  const NewtonResult r = newton_solve(res, jac, Vector::Constant(1, 0.5), opt);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 5);
}

TEST(Newton, SingularJacobianThrowsSolverError) {
  const auto res = [](const Vector& x) { return (x.array() + 1.0).matrix().eval(); };
  const auto jac = [](const Vector& x) { return Matrix::Zero(x.size(), x.size()).eval(); };
  try {
    newton_solve(res, jac, Vector::Zero(2));
    FAIL() << "expected throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Solver);
  }
}
