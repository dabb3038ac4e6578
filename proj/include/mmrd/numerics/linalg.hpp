#pragma once

#include "mmrd/numerics/matrix.hpp"

namespace mmrd {

/// F = Q·T with orthonormal Q (N x p) and upper-triangular T (p x p).
struct QrFactors {
  Matrix Q;
  Matrix T;
};

/// Orthonormal basis for col(F) by modified Gram-Schmidt with one
/// re-orthogonalization pass. Throws RankDeficient when a column collapses
/// below 1e-12·‖F‖.
QrFactors orthonormal_basis(const Matrix& F);

/// Eigenvalues sorted descending; `vectors` holds matching orthonormal columns.
struct EigenResult {
  Vector values;
  Matrix vectors;

  double max() const { return values.front(); }
  double min() const { return values.back(); }
};

/// Cyclic Jacobi on (M + Mᵀ)/2. Throws NoConvergence after the sweep budget.
EigenResult sym_eigen(const Matrix& M);

/// Lower-triangular L with M = L·Lᵀ. Throws NotPositiveDefinite.
Matrix cholesky(const Matrix& M);

/// Solves M·X = B for symmetric positive definite M.
Matrix solve_spd(const Matrix& M, const Matrix& B);
Vector solve_spd(const Matrix& M, std::span<const double> b);
Matrix spd_inverse(const Matrix& M);

/// Symmetric square root and inverse square root of a PSD / PD matrix.
Matrix sym_sqrt(const Matrix& M);
Matrix sym_inv_sqrt(const Matrix& M);

}  // namespace mmrd
