#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mkv/measure.hpp"

namespace mkv {

// Concatenated parameter vector: drift block theta1 (length p1) followed by
// diffusion block theta2 (length p2).
struct ThetaVector {
    std::vector<double> theta1;
    std::vector<double> theta2;

    std::size_t p1() const { return theta1.size(); }
    std::size_t p2() const { return theta2.size(); }
    std::size_t size() const { return theta1.size() + theta2.size(); }

    std::vector<double> flat() const;
    static ThetaVector from_flat(std::span<const double> values, std::size_t p1, std::size_t p2);
};

// Compact box of admissible parameters; lower[k] < upper[k] for all k.
struct ParamBox {
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t dim() const { return lower.size(); }
    void validate() const;
    bool contains(std::span<const double> flat) const;
    std::vector<double> clip(std::span<const double> flat) const;
    bool on_boundary(std::span<const double> flat) const;
    std::vector<double> center() const;
};

enum class ClosedForm { none, linear_model, multiplicative_theta2 };

// Diffusion coefficient in convolution form: a(x, mu) = a_tilde(x, (K*mu)(x))
// where (K*mu)(x) = mean_j K(x, X_j). Models that have this structure expose
// it so it can be checked against the direct evaluator.
struct KernelDiffusionSpec {
    std::function<double(double, double)> a_tilde; // (x, kernel mean) -> a
    std::function<double(double, double)> kernel;  // K(x, y)
};

// Coefficient-evaluation contract for one interacting particle model.
//
// Evaluators receive the full particle vector and compute whatever moments or
// kernel means they need from it directly; the empirical measure is never
// materialized. All evaluators must be pure and reentrant; ModelSpec values
// are immutable after construction and safe to share across threads.
struct ModelSpec {
    using Coeff = std::function<double(std::span<const double> theta, double x,
                                       std::span<const double> particles)>;
    // Gradient evaluators write into `out` (length p1 / p2).
    using CoeffGrad = std::function<void(std::span<const double> theta, double x,
                                         std::span<const double> particles,
                                         std::span<double> out)>;
    // Batch evaluator: drift of every particle given one column; used by the
    // simulator and the contrast loops, where pair-symmetric kernels make it
    // N times cheaper than per-particle calls.
    using DriftColumn = std::function<void(std::span<const double> theta1,
                                           std::span<const double> particles,
                                           std::span<double> out)>;
    using DiffusionColumn = DriftColumn;

    std::string name;
    int p1 = 0;
    int p2 = 0;

    Coeff drift;      // b(theta1, x, mu)
    Coeff diffusion;  // a(theta2, x, mu), strictly positive

    bool has_analytic_grads = false;
    CoeffGrad grad_drift_theta1;     // d b / d theta1
    CoeffGrad grad_csq_theta2;       // d c / d theta2 with c = a^2 (the contrast works in c)
    // False for coefficients that are not differentiable in theta (exact
    // indicator kernels); gradient-based operations then refuse to run.
    bool fd_gradients_ok = true;

    ClosedForm closed_form = ClosedForm::none;
    // For closed_form == multiplicative_theta2: c(theta2, x, mu) = theta2[0] * c_zero(x, mu).
    std::function<double(double x, std::span<const double> particles)> c_zero;

    DriftColumn drift_column;          // optional fast path
    DiffusionColumn diffusion_column;  // optional fast path

    // Present when the diffusion coefficient has the convolution form above.
    std::function<KernelDiffusionSpec(std::vector<double> theta2)> kernel_form;
};

// b(theta1, X^i, mu^N). Throws dimension_error on bad sizes, model_eval_error
// carrying (theta, i) on a non-finite output.
double eval_drift(const ModelSpec& model, std::span<const double> theta1, std::size_t i,
                  const ParticleState& particles);

// a(theta2, X^i, mu^N) > 0. Throws assumption_violation when the output is
// non-positive or non-finite.
double eval_diffusion(const ModelSpec& model, std::span<const double> theta2, std::size_t i,
                      const ParticleState& particles);

// Drift of every particle at one state; uses the model's batch evaluator when
// present, otherwise loops the per-particle one.
void eval_drift_all(const ModelSpec& model, std::span<const double> theta1,
                    std::span<const double> particles, std::span<double> out);
void eval_diffusion_all(const ModelSpec& model, std::span<const double> theta2,
                        std::span<const double> particles, std::span<double> out);

// Central finite-difference fallback for models without analytic gradients;
// step 1e-6 * (1 + |theta_k|) per component.
void fd_grad_drift(const ModelSpec& model, std::span<const double> theta1, double x,
                   std::span<const double> particles, std::span<double> out);
void fd_grad_csq(const ModelSpec& model, std::span<const double> theta2, double x,
                 std::span<const double> particles, std::span<double> out);

// Catalog: kuramoto, opinion_indicator, pearson_meanfield, meanfield_ou,
// linear, opinion_smooth. Throws on unknown names.
ModelSpec builtin_model(const std::string& name);

// Example-(ii) opinion model with a configurable mollification width for the
// indicator kernel. width == 0 keeps the exact indicator (contrast value only,
// no analytic gradients); width > 0 substitutes a logistic step of that scale.
ModelSpec opinion_indicator_model(double width);

std::vector<std::string> builtin_model_names();

} // namespace mkv
