#pragma once

#include "isvdrom/dense_numerics.hpp"

namespace isvdrom {

/// Orthonormal trial basis plus the singular values that summarize the
/// (weighted) snapshot history it was built from.
struct ReducedBasis {
  Matrix phi;    ///< N x r, orthonormal columns
  Vector sigma;  ///< r values, descending, nonnegative

  Index rank() const { return phi.cols(); }
  Index rows() const { return phi.rows(); }
};

}  // namespace isvdrom
