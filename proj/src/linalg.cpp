#include "mkv/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mkv/errors.hpp"

namespace mkv {

SymEig sym_eig(std::span<const double> matrix, std::size_t dim) {
    if (matrix.size() != dim * dim || dim == 0)
        throw dimension_error("sym_eig: matrix size does not match dimension");
    std::vector<double> a(matrix.begin(), matrix.end());
    std::vector<double> v(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) v[i * dim + i] = 1.0;

    const auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = i + 1; j < dim; ++j) s += a[i * dim + j] * a[i * dim + j];
        return std::sqrt(2.0 * s);
    };
    double scale = 0.0;
    for (double x : a) scale = std::max(scale, std::abs(x));
    const double tol = 1e-15 * std::max(scale, 1e-300);

    for (int sweep = 0; sweep < 100 && off_norm() > tol; ++sweep) {
        for (std::size_t p = 0; p < dim; ++p) {
            for (std::size_t q = p + 1; q < dim; ++q) {
                const double apq = a[p * dim + q];
                if (std::abs(apq) <= tol) continue;
                const double app = a[p * dim + p], aqq = a[q * dim + q];
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < dim; ++k) {
                    const double akp = a[k * dim + p], akq = a[k * dim + q];
                    a[k * dim + p] = c * akp - s * akq;
                    a[k * dim + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < dim; ++k) {
                    const double apk = a[p * dim + k], aqk = a[q * dim + k];
                    a[p * dim + k] = c * apk - s * aqk;
                    a[q * dim + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < dim; ++k) {
                    const double vkp = v[k * dim + p], vkq = v[k * dim + q];
                    v[k * dim + p] = c * vkp - s * vkq;
                    v[k * dim + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(dim);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return a[i * dim + i] < a[j * dim + j];
    });

    SymEig out;
    out.values.resize(dim);
    out.vectors.resize(dim * dim);
    for (std::size_t k = 0; k < dim; ++k) {
        out.values[k] = a[order[k] * dim + order[k]];
        for (std::size_t i = 0; i < dim; ++i) out.vectors[i * dim + k] = v[i * dim + order[k]];
    }
    return out;
}

std::vector<double> sym_inverse(std::span<const double> matrix, std::size_t dim,
                                double cond_limit) {
    const SymEig eig = sym_eig(matrix, dim);
    const double lo = eig.values.front(), hi = eig.values.back();
    if (!(lo > 0.0) || hi / lo > cond_limit)
        throw assumption_violation(
            "sym_inverse: matrix is singular or ill-conditioned (eigenvalue range [" +
            std::to_string(lo) + ", " + std::to_string(hi) + "])");
    std::vector<double> inv(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < dim; ++k)
                s += eig.vectors[i * dim + k] * eig.vectors[j * dim + k] / eig.values[k];
            inv[i * dim + j] = s;
        }
    return inv;
}

} // namespace mkv
