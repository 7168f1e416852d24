#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mkv/model.hpp"

namespace mkv {

struct NelderMeadOptions {
    // Stop when the simplex diameter falls below tol * (1 + ||best||).
    double tol = 1e-8;
    // 0 means 500 * dimension.
    std::size_t max_iters = 0;
};

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

// Derivative-free simplex minimization with projection onto a box: every
// candidate vertex is clamped componentwise before evaluation. Fully
// deterministic for a given starting point.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::span<const double> start, const ParamBox& box,
                             const NelderMeadOptions& options = {});

// Halton low-discrepancy point m (m >= 1) in the box, used for multi-start.
std::vector<double> halton_point(std::size_t m, const ParamBox& box);

} // namespace mkv
