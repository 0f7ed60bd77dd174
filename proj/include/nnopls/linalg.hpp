#pragma once

#include <optional>
#include <vector>

#include "nnopls/matrix.hpp"

namespace nnopls {

struct EigResult {
  std::vector<double> values; // descending
  Matrix vectors;             // orthonormal columns, vectors.col(j) <-> values[j]
};

// Symmetric eigendecomposition via cyclic Jacobi rotations. Eigenvalues are
// returned in descending order; each eigenvector's largest-magnitude
// coordinate is made positive (deterministic tie-breaking).
EigResult sym_eig(const Matrix& a);

struct SvdResult {
  Matrix u;               // p x k, orthonormal columns
  std::vector<double> s;  // k singular values, descending, >= 0
  Matrix v;               // q x k, orthonormal columns
};

// Thin SVD (k = min(p, q)) via one-sided Jacobi.
SvdResult svd(const Matrix& a);

// Cholesky factor of an SPD matrix; nullopt if the pivot goes non-positive.
std::optional<Matrix> cholesky(const Matrix& a);

// Solve a x = b for SPD a given its Cholesky factor l (a = l l^T).
std::vector<double> cholesky_solve(const Matrix& l, const std::vector<double>& b);

// Solve SPD system for a matrix right-hand side.
Matrix cholesky_solve(const Matrix& l, const Matrix& b);

// Generalized symmetric-definite eigenproblem a v = lambda b v with b SPD.
// Returns eigenvalues descending and b-orthogonal eigenvectors as columns.
EigResult generalized_eig(const Matrix& a, const Matrix& b);

} // namespace nnopls
