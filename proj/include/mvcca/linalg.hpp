#pragma once

#include <utility>
#include <vector>

#include "mvcca/matrix.hpp"

namespace mvcca {

// Full symmetric eigendecomposition, eigenvalues sorted descending,
// eigenvectors in columns with a deterministic sign convention (the entry of
// largest magnitude in each eigenvector is positive; ties break to the lowest
// index).
struct SymEig {
    std::vector<double> eigenvalues;
    Matrix eigenvectors;  // columns
};

// Economy SVD, singular values descending and nonnegative.
struct Svd {
    Matrix u;                             // p x r
    std::vector<double> singular_values;  // length r = min(p, q)
    Matrix v;                             // q x r
};

// Subtracts the per-row (feature) mean from every column.
// Returns the centered matrix and the mean vector.
std::pair<Matrix, std::vector<double>> center_columns(const Matrix& x);

// Input is symmetrized as (S + S^T)/2 before decomposition.
SymEig sym_eig(const Matrix& s);

Svd svd(const Matrix& a);

// (S + eps*I)^{-1/2} via the eigendecomposition. Throws NumericError naming
// the offending eigenvalue when the regularized spectrum is not positive.
Matrix inv_sqrt_sym(const Matrix& s, double eps);

// Frechet (directional) derivative of S -> (S + eps*I)^{-1/2} in direction dS,
// by the Daleckii-Krein formula on the eigenbasis. Near-degenerate eigenvalue
// pairs (|l_i - l_j| < 1e-12 * l_max) use the analytic derivative limit.
Matrix frechet_inv_sqrt(const Matrix& s, const Matrix& ds, double eps);

// Principal directions of a centered data matrix X (d x n). Rows of the
// returned q x d matrix are the top directions; q is the smallest count whose
// cumulative eigenvalue fraction reaches `energy`, further capped by max_dim
// when max_dim >= 0.
Matrix pca_fit(const Matrix& x, double energy, int max_dim = -1);

}  // namespace mvcca
