#pragma once

#include "finer/matrix.hpp"

namespace finer {

struct EigenDecomposition {
  Vector eigenvalues;  // ascending
  Matrix eigenvectors; // column i pairs with eigenvalues[i]
};

/// Eigen-decomposition of a real symmetric matrix by Householder
/// tridiagonalisation followed by implicit QL with Wilkinson shifts.
/// Throws std::invalid_argument for non-square input or when
/// |k(i,j) - k(j,i)| exceeds 1e-9 * max|k|.
EigenDecomposition eig_symmetric(const Matrix& k);

}  // namespace finer
