#include "isvdrom/hyper_reduction.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace isvdrom {

namespace {

Index field_column(const FomProblem& model, const std::string& name) {
  const auto names = model.field_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    fail(ErrorKind::Argument, "feature_field: model '" + model.name() + "' has no field '" + name + "'");
  }
  return static_cast<Index>(it - names.begin());
}

}  // namespace

Vector feature_field(const FomProblem& model, const Vector& y, const FeatureMap& feature) {
  switch (feature.kind) {
    case FeatureKind::Pressure:
      return model.fields(y).col(field_column(model, "p"));
    case FeatureKind::Velocity:
      return model.fields(y).col(field_column(model, "u"));
    case FeatureKind::Custom: {
      if (!feature.custom) fail(ErrorKind::Argument, "feature_field: custom feature without extractor");
      Vector theta = feature.custom(model, y);
      if (theta.size() != model.n_elem()) fail(ErrorKind::Argument, "feature_field: custom feature length mismatch");
      return theta;
    }
  }
  fail(ErrorKind::Argument, "feature_field: unknown feature kind");
}

Vector feature_gradient(const FomProblem& model, const Vector& theta) {
  const Index n = model.n_elem();
  if (theta.size() != n) fail(ErrorKind::Argument, "feature_gradient: field length mismatch");
  const double dx = model.dx();
  const bool periodic = model.boundary() == Boundary::Periodic;
  Vector g(n);
  for (Index i = 0; i < n; ++i) {
    if (periodic || (i > 0 && i < n - 1)) {
      g(i) = (theta(model.neighbor(i, 1)) - theta(model.neighbor(i, -1))) / (2.0 * dx);
    } else if (i == 0) {
      g(i) = (theta(1) - theta(0)) / dx;
    } else {
      g(i) = (theta(n - 1) - theta(n - 2)) / dx;
    }
  }
  return g.cwiseAbs();
}

SamplingSet qdeim_sample(const ReducedBasis& basis, Index n_s) {
  const Index n = basis.rows();
  const Index r = basis.rank();
  if (n_s < r) fail(ErrorKind::Argument, "qdeim_sample: n_s must be >= r");
  if (n_s > n) fail(ErrorKind::Argument, "qdeim_sample: n_s exceeds the state dimension");

  SamplingSet out;
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  while (out.size() < n_s) {
    std::vector<Index> free_rows;
    for (Index i = 0; i < n; ++i) {
      if (!taken[static_cast<std::size_t>(i)]) free_rows.push_back(i);
    }
    Matrix phit(r, static_cast<Index>(free_rows.size()));
    for (std::size_t c = 0; c < free_rows.size(); ++c) phit.col(static_cast<Index>(c)) = basis.phi.row(free_rows[c]).transpose();
    const Index k = std::min(r, n_s - out.size());
    PivotedQr qr;
    try {
      qr = pivoted_qr(phit, k);
    } catch (const Error& e) {
      fail(ErrorKind::Numerical, "qdeim_sample: after " + std::to_string(out.size()) + " rows: " + e.what());
    }
    for (Index p : qr.pivots) {
      const Index row = free_rows[static_cast<std::size_t>(p)];
      taken[static_cast<std::size_t>(row)] = true;
      out.indices.push_back(row);
    }
  }
  return out;
}

SamplingSet fgs_sample(const ReducedBasis& basis, const FomProblem& model, const Vector& y_corr, Index n_s,
                       const FeatureMap& feature) {
  if (feature.n_extra < 0 || feature.n_extra > n_s) fail(ErrorKind::Argument, "fgs_sample: n_extra must lie in [0, n_s]");
  if (y_corr.size() != model.size()) fail(ErrorKind::Argument, "fgs_sample: signal length mismatch");
  if (n_s > model.size()) fail(ErrorKind::Argument, "fgs_sample: n_s exceeds the state dimension");
  SamplingSet out = qdeim_sample(basis, n_s - feature.n_extra);

  const Vector grad = feature_gradient(model, feature_field(model, y_corr, feature));
  std::vector<Index> order(static_cast<std::size_t>(model.n_elem()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return grad(a) > grad(b); });

  std::set<Index> chosen(out.indices.begin(), out.indices.end());
  for (Index cell : order) {
    for (Index v = 0; v < model.n_var() && out.size() < n_s; ++v) {
      const Index row = cell * model.n_var() + v;
      if (chosen.insert(row).second) out.indices.push_back(row);
    }
    if (out.size() == n_s) break;
  }
  return out;
}

Matrix build_deim_operator(const ReducedBasis& basis, const SamplingSet& sampling) {
  const Index r = basis.rank();
  if (sampling.size() < r) fail(ErrorKind::Argument, "build_deim_operator: fewer samples than basis vectors");
  Matrix pt_phi(sampling.size(), r);
  for (Index i = 0; i < sampling.size(); ++i) {
    const Index row = sampling.indices[static_cast<std::size_t>(i)];
    if (row < 0 || row >= basis.rows()) fail(ErrorKind::Argument, "build_deim_operator: sample index out of range");
    pt_phi.row(i) = basis.phi.row(row);
  }
  const SvdResult svd = thin_svd(pt_phi);
  const double smin = svd.S(svd.S.size() - 1);
  if (!(smin > kPinvCutoff * svd.S(0))) {
    std::ostringstream msg;
    msg << "build_deim_operator: sampled basis is rank deficient (smallest singular value " << smin
        << ", largest " << svd.S(0) << ")";
    fail(ErrorKind::Numerical, msg.str());
  }
  return svd.V * svd.S.cwiseInverse().asDiagonal() * svd.U.transpose();
}

SamplingSet stencil_closure(SamplingSet sampling, const FomProblem& model) {
  const Index radius = model.stencil_radius();
  std::set<Index> rows;
  for (Index row : sampling.indices) {
    if (row < 0 || row >= model.size()) fail(ErrorKind::Argument, "stencil_closure: sample index out of range");
    const Index cell = row / model.n_var();
    for (Index off = -radius; off <= radius; ++off) {
      const Index c = model.neighbor(cell, off);
      for (Index v = 0; v < model.n_var(); ++v) rows.insert(c * model.n_var() + v);
    }
  }
  sampling.closure.assign(rows.begin(), rows.end());
  return sampling;
}

}  // namespace isvdrom
