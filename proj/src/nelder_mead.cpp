#include "mkv/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mkv {

namespace {

double radical_inverse(std::size_t index, std::size_t base) {
    double result = 0.0, f = 1.0 / static_cast<double>(base);
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= static_cast<double>(base);
    }
    return result;
}

constexpr std::size_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

} // namespace

std::vector<double> halton_point(std::size_t m, const ParamBox& box) {
    std::vector<double> x(box.dim());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double u = radical_inverse(m, kPrimes[k % std::size(kPrimes)]);
        x[k] = box.lower[k] + u * (box.upper[k] - box.lower[k]);
    }
    return x;
}

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::span<const double> start, const ParamBox& box,
                             const NelderMeadOptions& options) {
    const std::size_t dim = box.dim();
    const std::size_t max_iters = options.max_iters ? options.max_iters : 500 * dim;
    constexpr double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    const auto clipped_eval = [&](std::vector<double>& x) {
        x = box.clip(x);
        return objective(x);
    };

    // Initial simplex: the start plus one vertex per axis, stepping 5% of the
    // box width (flipped when that would leave the box).
    std::vector<std::vector<double>> vertex(dim + 1, box.clip(start));
    std::vector<double> value(dim + 1);
    for (std::size_t k = 0; k < dim; ++k) {
        double step = 0.05 * (box.upper[k] - box.lower[k]);
        if (vertex[k + 1][k] + step > box.upper[k]) step = -step;
        vertex[k + 1][k] += step;
    }
    for (std::size_t v = 0; v <= dim; ++v) value[v] = clipped_eval(vertex[v]);

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), candidate(dim);
    NelderMeadResult result;

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
        const std::size_t best = order.front(), worst = order.back();
        const std::size_t second_worst = order[dim ? dim - 1 : 0];

        double diameter = 0.0;
        for (std::size_t v = 0; v <= dim; ++v)
            for (std::size_t k = 0; k < dim; ++k)
                diameter = std::max(diameter, std::abs(vertex[v][k] - vertex[best][k]));
        double norm = 0.0;
        for (double c : vertex[best]) norm += c * c;
        if (diameter < options.tol * (1.0 + std::sqrt(norm))) {
            result.converged = true;
            result.iterations = iter;
            result.x = vertex[best];
            result.fx = value[best];
            return result;
        }

        for (std::size_t k = 0; k < dim; ++k) {
            double s = 0.0;
            for (std::size_t v = 0; v <= dim; ++v)
                if (v != worst) s += vertex[v][k];
            centroid[k] = s / static_cast<double>(dim);
        }

        for (std::size_t k = 0; k < dim; ++k)
            candidate[k] = centroid[k] + alpha * (centroid[k] - vertex[worst][k]);
        const double f_reflect = clipped_eval(candidate);
        std::vector<double> reflected = candidate;

        if (f_reflect < value[best]) {
            for (std::size_t k = 0; k < dim; ++k)
                candidate[k] = centroid[k] + gamma * (reflected[k] - centroid[k]);
            const double f_expand = clipped_eval(candidate);
            if (f_expand < f_reflect) {
                vertex[worst] = candidate;
                value[worst] = f_expand;
            } else {
                vertex[worst] = reflected;
                value[worst] = f_reflect;
            }
        } else if (f_reflect < value[second_worst]) {
            vertex[worst] = reflected;
            value[worst] = f_reflect;
        } else {
            for (std::size_t k = 0; k < dim; ++k)
                candidate[k] = centroid[k] + rho * (vertex[worst][k] - centroid[k]);
            const double f_contract = clipped_eval(candidate);
            if (f_contract < value[worst]) {
                vertex[worst] = candidate;
                value[worst] = f_contract;
            } else {
                for (std::size_t v = 0; v <= dim; ++v) {
                    if (v == best) continue;
                    for (std::size_t k = 0; k < dim; ++k)
                        vertex[v][k] = vertex[best][k] + sigma * (vertex[v][k] - vertex[best][k]);
                    value[v] = clipped_eval(vertex[v]);
                }
            }
        }
    }

    const std::size_t best = static_cast<std::size_t>(
        std::min_element(value.begin(), value.end()) - value.begin());
    result.converged = false;
    result.iterations = max_iters;
    result.x = vertex[best];
    result.fx = value[best];
    return result;
}

} // namespace mkv
