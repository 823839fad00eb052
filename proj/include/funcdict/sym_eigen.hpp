#pragma once

#include "funcdict/matrix.hpp"

namespace funcdict {

struct EigenDecomposition {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // orthonormal columns, eigenvectors.col(j) <-> eigenvalues[j]
};

// Cyclic Jacobi eigensolver for symmetric matrices (m <= 1024). Eigenvalues
// are sorted ascending and each eigenvector's first nonzero component is made
// positive, so results are deterministic. Throws InvalidInputError if the
// input is asymmetric beyond 1e-9.
EigenDecomposition sym_eigen(const Matrix& s);

}  // namespace funcdict
