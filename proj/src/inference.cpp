#include "mkv/inference.hpp"

#include <cmath>

#include "mkv/errors.hpp"
#include "mkv/linalg.hpp"
#include "mkv/stats.hpp"

namespace mkv {

namespace {

void symmetrize(std::vector<double>& m, std::size_t dim) {
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = i + 1; j < dim; ++j) {
            const double avg = 0.5 * (m[i * dim + j] + m[j * dim + i]);
            m[i * dim + j] = avg;
            m[j * dim + i] = avg;
        }
}

} // namespace

SigmaEstimate estimate_sigma(const ModelSpec& model, const ThetaVector& theta,
                             const TrajectoryPanel& panel) {
    if (theta.p1() != static_cast<std::size_t>(model.p1) ||
        theta.p2() != static_cast<std::size_t>(model.p2))
        throw dimension_error("estimate_sigma: theta dimensions do not match model '" +
                              model.name + "'");
    if (!model.has_analytic_grads && !model.fd_gradients_ok)
        throw error("estimate_sigma: coefficient gradients unavailable for model '" + model.name +
                    "'");
    const auto p1 = theta.p1();
    const auto p2 = theta.p2();
    const std::size_t N = panel.N;
    const double delta = panel.grid.delta_n;

    SigmaEstimate sigma;
    sigma.p1 = p1;
    sigma.p2 = p2;
    sigma.sigma1.assign(p1 * p1, 0.0);
    sigma.sigma2.assign(p2 * p2, 0.0);

    std::vector<double> prev(N), diffusion(N), gb(p1), gc(p2);
    for (std::size_t j = 1; j <= panel.grid.n; ++j) {
        panel.column(j - 1, prev);
        eval_diffusion_all(model, theta.theta2, prev, diffusion);
        for (std::size_t i = 0; i < N; ++i) {
            const double c = diffusion[i] * diffusion[i];
            if (!(c > 0.0) || !std::isfinite(c))
                throw assumption_violation("estimate_sigma: squared diffusion non-positive at particle " +
                                           std::to_string(i) + ", grid index " + std::to_string(j));
            if (model.has_analytic_grads) {
                model.grad_drift_theta1(theta.theta1, prev[i], prev, gb);
                model.grad_csq_theta2(theta.theta2, prev[i], prev, gc);
            } else {
                fd_grad_drift(model, theta.theta1, prev[i], prev, gb);
                fd_grad_csq(model, theta.theta2, prev[i], prev, gc);
            }
            for (std::size_t k = 0; k < p1; ++k)
                for (std::size_t l = 0; l < p1; ++l) sigma.sigma1[k * p1 + l] += gb[k] * gb[l] / c;
            for (std::size_t k = 0; k < p2; ++k)
                for (std::size_t l = 0; l < p2; ++l)
                    sigma.sigma2[k * p2 + l] += gc[k] * gc[l] / (c * c);
        }
    }
    const double scale1 = 2.0 * delta / static_cast<double>(N);
    const double scale2 = delta / static_cast<double>(N);
    for (auto& v : sigma.sigma1) v *= scale1;
    for (auto& v : sigma.sigma2) v *= scale2;
    symmetrize(sigma.sigma1, p1);
    symmetrize(sigma.sigma2, p2);
    return sigma;
}

std::vector<double> standard_errors(const SigmaEstimate& sigma, std::size_t N, double delta_n) {
    if (N < 1 || !(delta_n > 0.0))
        throw dimension_error("standard_errors: need N >= 1 and delta_n > 0");
    std::vector<double> inv1, inv2;
    try {
        inv1 = sym_inverse(sigma.sigma1, sigma.p1);
        inv2 = sym_inverse(sigma.sigma2, sigma.p2);
    } catch (const assumption_violation& e) {
        throw assumption_violation(std::string("standard_errors: covariance block not invertible: ") +
                                   e.what());
    }
    std::vector<double> se(sigma.p1 + sigma.p2);
    for (std::size_t k = 0; k < sigma.p1; ++k)
        se[k] = std::sqrt(2.0 * inv1[k * sigma.p1 + k] / static_cast<double>(N));
    for (std::size_t k = 0; k < sigma.p2; ++k)
        se[sigma.p1 + k] =
            std::sqrt(2.0 * inv2[k * sigma.p2 + k] * delta_n / static_cast<double>(N));
    return se;
}

TestReport noninteraction_test(const TrajectoryPanel& panel, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw error("noninteraction_test: alpha must be in (0,1)");
    const EstimateResult fit = closed_form_linear(panel);
    const LinearSuffStats stats = linear_sufficient_stats(panel);
    const double theta2 = fit.theta_hat.theta2[0];
    const double v = theta2 * stats.D / ((stats.D - stats.C) * stats.C);
    if (!(v > 0.0) || !std::isfinite(v))
        throw degenerate_panel_error("noninteraction_test: variance estimate V is not positive");

    TestReport report;
    report.theta12_hat = fit.theta_hat.theta1[1];
    report.v = v;
    report.z = report.theta12_hat * std::sqrt(static_cast<double>(panel.N) / v);
    report.p_value = 2.0 * (1.0 - normal_cdf(std::abs(report.z)));
    for (double level : {0.01, 0.05, 0.10, alpha}) {
        const double critical = normal_quantile_bisect(1.0 - level / 2.0);
        report.reject_at[level] = std::abs(report.z) > critical;
    }
    return report;
}

std::pair<double, double> identifiability_functionals(const ModelSpec& model,
                                                      const ThetaVector& theta,
                                                      const ThetaVector& theta0,
                                                      const SimConfig& cfg,
                                                      const ObservationGrid& grid) {
    const TrajectoryPanel panel = simulate_panel(model, theta0, cfg, grid);
    const std::size_t N = panel.N;
    std::vector<double> prev(N), b(N), b0(N), a(N), a0(N);
    double sum_i = 0.0, sum_j = 0.0;
    for (std::size_t j = 1; j <= panel.grid.n; ++j) {
        panel.column(j - 1, prev);
        eval_drift_all(model, theta.theta1, prev, b);
        eval_drift_all(model, theta0.theta1, prev, b0);
        eval_diffusion_all(model, theta.theta2, prev, a);
        eval_diffusion_all(model, theta0.theta2, prev, a0);
        for (std::size_t i = 0; i < N; ++i) {
            const double c = a[i] * a[i];
            if (!(c > 0.0) || !std::isfinite(c))
                throw assumption_violation(
                    "identifiability_functionals: squared diffusion non-positive at particle " +
                    std::to_string(i));
            const double db = b[i] - b0[i];
            sum_i += db * db / c;
            sum_j += a0[i] * a0[i] / c + std::log(c);
        }
    }
    const double scale = panel.grid.delta_n / static_cast<double>(N);
    return {scale * sum_i, scale * sum_j};
}

} // namespace mkv
