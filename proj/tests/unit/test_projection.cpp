#include <gtest/gtest.h>

#include <numeric>

#include "isvdrom/projection.hpp"
#include "test_support.hpp"

using namespace isvdrom;

namespace {

// f(q) = A q with a periodic tridiagonal A, so the backward-Euler step has a
// closed form.
class LinearProblem final : public FomProblem {
 public:
  LinearProblem(Index n, double lo, double mid, double hi)
      : FomProblem(n, 1, 1.0, Boundary::Periodic), lo_(lo), mid_(mid), hi_(hi) {}

  Matrix a() const {
    Matrix m = Matrix::Zero(size(), size());
    for (Index i = 0; i < size(); ++i) {
      m(i, neighbor(i, -1)) += lo_;
      m(i, i) += mid_;
      m(i, neighbor(i, 1)) += hi_;
    }
    return m;
  }

  using FomProblem::rhs;
  std::string name() const override { return "linear"; }
  std::vector<std::string> field_names() const override { return {"q"}; }
  Matrix fields(const Vector& q) const override { return q; }
  Vector coordinates() const override { return Vector::LinSpaced(size(), 0, 1); }
  Vector initial_state() const override { return Vector::Zero(size()); }
  void rhs(const Vector& q, Vector& f) const override {
    f.resize(size());
    for (Index i = 0; i < size(); ++i) f(i) = row(q, i);
  }
  void rhs_rows(const Vector& q, std::span<const Index> rows, Vector& out) const override {
    out.resize(static_cast<Index>(rows.size()));
    for (size_t k = 0; k < rows.size(); ++k) out(static_cast<Index>(k)) = row(q, rows[k]);
  }

 private:
  double row(const Vector& q, Index i) const {
    return lo_ * q(neighbor(i, -1)) + mid_ * q(i) + hi_ * q(neighbor(i, 1));
  }
  double lo_, mid_, hi_;
};

SamplingSet all_rows(Index n) {
  SamplingSet s;
  s.indices.resize(static_cast<size_t>(n));
  std::iota(s.indices.begin(), s.indices.end(), Index{0});
  return s;
}

ReducedBasis basis_of(const Matrix& phi) { return {phi, Vector::Ones(phi.cols())}; }

// A small hyper-reduced Burgers operator built from a short FOM run.
struct BurgersSetup {
  BurgersProblem model{64, 0.01};
  std::vector<Vector> snaps;
  RomOperator make(ProjectionKind kind, Index r = 4, Index ns = 8) {
    Vector q = model.initial_state();
    snaps.assign(1, q);
    for (int n = 0; n < 30; ++n) snaps.push_back(q = implicit_step(model, q, {}).q);
    Matrix y(64, static_cast<Index>(snaps.size()) - 1);
    for (Index j = 0; j < y.cols(); ++j) y.col(j) = snaps[static_cast<size_t>(j) + 1] - snaps[0];
    const ReducedBasis b = pod(y, r);
    ScalingTransform scaling(snaps[0], Vector::Ones(1));
    return RomOperator(model, b, scaling, qdeim_sample(b, ns), kind);
  }
};

}  // namespace

TEST(RomOperator, EncodeDecode) {
  std::mt19937_64 rng(41);
  BurgersProblem m(20, 0.01);
  const Matrix phi = testing_support::random_orthonormal(20, 3, rng);
  const Vector ref = testing_support::gaussian(20, rng);
  RomOperator op(m, basis_of(phi), ScalingTransform(ref, Vector::Constant(1, 0.25)), all_rows(20),
                 ProjectionKind::Galerkin);
  EXPECT_LT(op.encode(ref).norm(), 1e-14);
  EXPECT_EQ(op.decode(Vector::Zero(3)), ref);
  const Vector q = op.decode(testing_support::gaussian(3, rng));
  EXPECT_LT((op.decode(op.encode(q)) - q).norm(), 1e-12);

  // transferring an arbitrary state leaves a D-scaled remainder orthogonal to Phi
  const Vector x = testing_support::gaussian(20, rng);
  const Vector remainder = (x - op.decode(op.encode(x))) / 0.25;
  EXPECT_LT((phi.transpose() * remainder).norm(), 1e-12);
}

TEST(Galerkin, FullRankEqualsFomStep) {
  BurgersProblem m(16, 0.01);
  RomOperator op(m, basis_of(Matrix::Identity(16, 16)), ScalingTransform::identity(16, 1), all_rows(16),
                 ProjectionKind::Galerkin);
  const Vector q = m.initial_state();
  RomWorkspace ws(16);
  const RomStepResult r = galerkin_step(op, m, q, 1e-3, ws);
  EXPECT_TRUE(r.converged);
  EXPECT_LT((r.a - implicit_step(m, q, {}).q).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Lspg, FullRankEqualsFomStep) {
  BurgersProblem m(16, 0.01);
  RomOperator op(m, basis_of(Matrix::Identity(16, 16)), ScalingTransform::identity(16, 1), all_rows(16),
                 ProjectionKind::Lspg);
  const Vector q = m.initial_state();
  RomWorkspace ws(16);
  const RomStepResult r = lspg_step(op, m, q, 1e-3, ws);
  EXPECT_LT((r.a - implicit_step(m, q, {}).q).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Galerkin, ZeroRightHandSideKeepsCoordinates) {
  std::mt19937_64 rng(42);
  LinearProblem m(10, 0.0, 0.0, 0.0);
  RomOperator op(m, basis_of(testing_support::random_orthonormal(10, 3, rng)), ScalingTransform::identity(10, 1),
                 all_rows(10), ProjectionKind::Galerkin);
  const Vector a = testing_support::gaussian(3, rng);
  RomWorkspace ws(10);
  EXPECT_LT((galerkin_step(op, m, a, 0.1, ws).a - a).norm(), 1e-14);
}

TEST(Galerkin, LinearClosedForm) {
  std::mt19937_64 rng(43);
  LinearProblem m(6, 0.7, -2.0, 0.4);
  const Matrix phi = testing_support::random_orthonormal(6, 2, rng);
  RomOperator op(m, basis_of(phi), ScalingTransform::identity(6, 1), all_rows(6), ProjectionKind::Galerkin);
  const Vector a = testing_support::gaussian(2, rng);
  const double dt = 0.05;
  const Matrix ar = phi.transpose() * m.a() * phi;
  const Vector expected = (Matrix::Identity(2, 2) - dt * ar).lu().solve(a);
  RomWorkspace ws(6);
  EXPECT_LT((galerkin_step(op, m, a, dt, ws).a - expected).norm(), 1e-8);
}

TEST(Lspg, ZeroResidualStateIsKept) {
  std::mt19937_64 rng(44);
  BurgersProblem m(24, 0.01);
  Matrix raw(24, 2);
  raw.col(0) = Vector::Ones(24);
  raw.col(1) = testing_support::gaussian(24, rng);
  const Matrix phi = testing_support::gram_schmidt(raw);
  RomOperator op(m, basis_of(phi), ScalingTransform::identity(24, 1), qdeim_sample(basis_of(phi), 4),
                 ProjectionKind::Lspg);
  const Vector a = (Vector(2) << 0.8 * std::sqrt(24.0), 0.0).finished();  // q = 0.8 everywhere
  RomWorkspace ws(24);
  EXPECT_LT((lspg_step(op, m, a, 1e-3, ws).a - a).norm(), 1e-10);
}

TEST(Lspg, ObjectiveNoWorseThanGalerkin) {
  BurgersSetup setup;
  const RomOperator lspg = setup.make(ProjectionKind::Lspg);
  const RomOperator gal = setup.make(ProjectionKind::Galerkin);
  const Vector a = lspg.encode(setup.snaps.back());
  RomWorkspace ws(64);
  const Vector al = lspg_step(lspg, setup.model, a, 1e-3, ws).a;
  const Vector ag = galerkin_step(gal, setup.model, a, 1e-3, ws).a;
  const double jl = lspg_objective(lspg, setup.model, a, al, 1e-3, ws);
  const double jg = lspg_objective(lspg, setup.model, a, ag, 1e-3, ws);
  EXPECT_LE(jl, jg * (1 + 1e-12) + 1e-30);
}

TEST(Lspg, PerturbationsDoNotImproveObjective) {
  BurgersSetup setup;
  const RomOperator op = setup.make(ProjectionKind::Lspg);
  const Vector a = op.encode(setup.snaps.back());
  RomWorkspace ws(64);
  const Vector best = lspg_step(op, setup.model, a, 1e-3, ws).a;
  const double j0 = lspg_objective(op, setup.model, a, best, 1e-3, ws);
  for (Index i = 0; i < best.size(); ++i)
    for (double s : {-1e-4, 1e-4}) {
      Vector p = best;
      p(i) += s;
      EXPECT_GE(lspg_objective(op, setup.model, a, p, 1e-3, ws), j0 * (1 - 1e-10)) << i << " " << s;
    }
}

TEST(Locality, OnlyClosureRowsAreRead) {
  BurgersSetup setup;
  const RomOperator op = setup.make(ProjectionKind::Galerkin);
  const Vector a = op.encode(setup.snaps.back());

  RomWorkspace ws(64);  // NaN everywhere
  const RomStepResult r = galerkin_step(op, setup.model, a, 1e-3, ws);
  EXPECT_TRUE(r.a.allFinite());

  // garbage in the basis and reference outside the closure changes nothing
  ReducedBasis b = op.basis();
  Vector ref = op.scaling().q_ref();
  const auto& closure = op.sampling().closure;
  for (Index row = 0; row < 64; ++row) {
    if (std::binary_search(closure.begin(), closure.end(), row)) continue;
    b.phi.row(row).setConstant(1e3);
    ref(row) = -7.0;
  }
  SamplingSet s;
  s.indices = op.sampling().indices;
  RomOperator poisoned(setup.model, b, ScalingTransform(ref, Vector::Ones(1)), s, ProjectionKind::Galerkin);
  RomWorkspace ws2(64);
  EXPECT_EQ(galerkin_step(poisoned, setup.model, a, 1e-3, ws2).a, r.a);
}

TEST(RomStep, DispatchesOnKind) {
  BurgersSetup setup;
  const RomOperator op = setup.make(ProjectionKind::Lspg);
  const Vector a = op.encode(setup.snaps.back());
  RomWorkspace w1(64), w2(64);
  EXPECT_EQ(rom_step(op, setup.model, a, 1e-3, w1).a, lspg_step(op, setup.model, a, 1e-3, w2).a);
  EXPECT_EQ(parse_projection(projection_name(ProjectionKind::Galerkin)), ProjectionKind::Galerkin);
  EXPECT_THROW(parse_projection("petrov"), Error);
}
