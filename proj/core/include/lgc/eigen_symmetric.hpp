#pragma once

#include <vector>

#include "lgc/matrix.hpp"

namespace lgc {

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column k pairs with values[k]; empty when not requested
};

/// Eigen-decomposition of a real symmetric matrix by Householder reduction to
/// tridiagonal form followed by the implicit QL algorithm. Only the lower triangle
/// is read. Throws NumericalError if an eigenvalue fails to converge within
/// 30 * n QL sweeps, or if the input contains non-finite entries.
SymmetricEigen eigen_symmetric(const Matrix& a, bool want_vectors = false);

std::vector<double> eigenvalues_symmetric(const Matrix& a);

}  // namespace lgc
