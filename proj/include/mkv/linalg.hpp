#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mkv {

// Eigendecomposition of a small dense symmetric matrix (row-major, dim x dim)
// by cyclic Jacobi rotations. Eigenvalues ascending; eigenvector k is the
// k-th column of `vectors`.
struct SymEig {
    std::vector<double> values;
    std::vector<double> vectors; // row-major dim x dim
};

SymEig sym_eig(std::span<const double> matrix, std::size_t dim);

// Inverse of a symmetric positive-definite matrix through its spectrum.
// Throws assumption_violation when the condition number exceeds `cond_limit`
// or an eigenvalue is non-positive.
std::vector<double> sym_inverse(std::span<const double> matrix, std::size_t dim,
                                double cond_limit = 1e12);

} // namespace mkv
