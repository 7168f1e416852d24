#pragma once

#include <optional>
#include <vector>

#include "mkv/model.hpp"
#include "mkv/simulate.hpp"

namespace mkv {

enum class EstimateMethod { closed_form, nelder_mead, profiled };

struct EstimateResult {
    ThetaVector theta_hat;
    double contrast_at_opt = 0.0;
    EstimateMethod method = EstimateMethod::nelder_mead;
    std::size_t iterations = 0;
    bool converged = false;
    std::size_t starts_used = 0;
    // True when a component of theta_hat sits on the box boundary; the theory
    // assumes an interior optimum, so a boundary hit flags misspecification.
    bool on_boundary = false;
    std::optional<std::vector<double>> standard_errors;
};

struct MinimizeOptions {
    std::size_t starts = 8;   // box center + low-discrepancy points
    double tol = 1e-8;        // simplex diameter tolerance, scaled by 1 + |theta|
    std::size_t max_iters = 0; // per start; 0 -> 500 * dimension
    bool force_numeric = false; // skip closed-form/profile dispatch (oracle tests)
};

// Gaussian quasi-likelihood objective over the panel:
//   sum_{i,j} (dX - delta_n b)^2 / (delta_n c) + log c,
// with b, c = a^2 evaluated at (theta, X^i_{t_{j-1}}, column j-1).
double contrast_value(const ModelSpec& model, const ThetaVector& theta,
                      const TrajectoryPanel& panel);

// Exact objective gradient (length p1+p2):
//   d/d theta1_k = -2 sum d_k b (dX - delta_n b) / c
//   d/d theta2_k = sum d_k c (1/c - (dX - delta_n b)^2 / (delta_n c^2)).
// Uses analytic coefficient gradients when the model has them, otherwise the
// central finite-difference fallback.
std::vector<double> contrast_gradient(const ModelSpec& model, const ThetaVector& theta,
                                      const TrajectoryPanel& panel);

// Sufficient statistics of the linear model:
//   A = (1/N) sum (X - colmean)(dX),  B = (1/N) sum X dX,
//   C = (delta_n/N) sum (X - colmean)^2,  D = (delta_n/N) sum X^2,
// all over left grid endpoints. Also feeds the non-interaction test.
struct LinearSuffStats {
    double A = 0.0, B = 0.0, C = 0.0, D = 0.0;
};
LinearSuffStats linear_sufficient_stats(const TrajectoryPanel& panel);

// Closed-form minimizer for the linear model via the A, B, C, D statistics.
// Throws degenerate_panel_error when |C| or |D - C| falls below the
// scale-aware threshold 1e-12 * (1 + D).
EstimateResult closed_form_linear(const TrajectoryPanel& panel);

// For models with c(theta2, x, mu) = theta2 * c0(x, mu) (p2 == 1): the exact
// stationary theta2 given theta1,
//   theta2(theta1) = (1/(N T)) sum (dX - delta_n b(theta1))^2 / c0.
std::vector<double> profile_theta2(const ModelSpec& model, const TrajectoryPanel& panel,
                                   std::span<const double> theta1);

// Contrast minimization over the box. Dispatch: linear closed form when the
// model declares it, profiled theta2 + simplex over theta1 for multiplicative
// models, multi-start simplex on the full box otherwise. The returned point
// is clipped to the box.
EstimateResult minimize_contrast(const ModelSpec& model, const TrajectoryPanel& panel,
                                 const ParamBox& box, const MinimizeOptions& opts = {});

} // namespace mkv
