#include "mkv/contrast.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mkv/errors.hpp"
#include "mkv/nelder_mead.hpp"

namespace mkv {

namespace {

// Column-major copy of the panel so the per-column loops touch contiguous
// memory; built once per estimation, shared across objective evaluations.
struct PanelColumns {
    std::size_t N, n;
    double delta_n;
    std::vector<double> values; // (n+1) blocks of N

    explicit PanelColumns(const TrajectoryPanel& panel)
        : N(panel.N), n(panel.grid.n), delta_n(panel.grid.delta_n), values((n + 1) * N) {
        for (std::size_t j = 0; j <= n; ++j)
            for (std::size_t i = 0; i < N; ++i) values[j * N + i] = panel.at(i, j);
    }

    std::span<const double> col(std::size_t j) const { return {values.data() + j * N, N}; }
    double horizon() const { return static_cast<double>(n) * delta_n; }
};

struct KahanSum {
    double sum = 0.0, carry = 0.0;
    void add(double term) {
        const double y = term - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

void check_c(double c, std::size_t i, std::size_t j, const std::string& model_name) {
    if (!(c > 0.0) || !std::isfinite(c))
        throw assumption_violation("contrast: squared diffusion non-positive for model '" +
                                   model_name + "' at particle " + std::to_string(i) +
                                   ", grid index " + std::to_string(j));
}

// One full objective evaluation. `drift` and `diffusion` are caller-owned
// scratch of length N.
double contrast_core(const ModelSpec& model, std::span<const double> theta1,
                     std::span<const double> theta2, const PanelColumns& pc,
                     std::vector<double>& drift, std::vector<double>& diffusion) {
    const double delta = pc.delta_n;
    KahanSum acc;
    for (std::size_t j = 1; j <= pc.n; ++j) {
        const auto prev = pc.col(j - 1);
        const auto cur = pc.col(j);
        eval_drift_all(model, theta1, prev, drift);
        eval_diffusion_all(model, theta2, prev, diffusion);
        for (std::size_t i = 0; i < pc.N; ++i) {
            const double c = diffusion[i] * diffusion[i];
            check_c(c, i, j, model.name);
            const double r = cur[i] - prev[i] - delta * drift[i];
            acc.add(r * r / (delta * c) + std::log(c));
        }
    }
    return acc.sum;
}

void check_theta_dims(const ModelSpec& model, const ThetaVector& theta, const char* what) {
    if (theta.p1() != static_cast<std::size_t>(model.p1) ||
        theta.p2() != static_cast<std::size_t>(model.p2))
        throw dimension_error(std::string(what) + ": theta dimensions do not match model '" +
                              model.name + "'");
}

std::string format_vec(std::span<const double> v) {
    std::ostringstream os;
    os << "(";
    for (std::size_t k = 0; k < v.size(); ++k) os << (k ? "," : "") << v[k];
    os << ")";
    return os.str();
}

LinearSuffStats linear_stats(const PanelColumns& pc) {
    const double invN = 1.0 / static_cast<double>(pc.N);
    KahanSum A, B, C, D;
    for (std::size_t j = 1; j <= pc.n; ++j) {
        const auto prev = pc.col(j - 1);
        const auto cur = pc.col(j);
        double mean = 0.0;
        for (double x : prev) mean += x;
        mean *= invN;
        for (std::size_t i = 0; i < pc.N; ++i) {
            const double x = prev[i];
            const double dx = cur[i] - x;
            const double centered = x - mean;
            A.add(centered * dx);
            B.add(x * dx);
            C.add(centered * centered);
            D.add(x * x);
        }
    }
    return {A.sum * invN, B.sum * invN, C.sum * pc.delta_n * invN, D.sum * pc.delta_n * invN};
}

EstimateResult closed_form_linear_impl(const PanelColumns& pc) {
    const auto [A, B, C, D] = linear_stats(pc);
    const double guard = 1e-12 * (1.0 + D);
    if (std::abs(C) < guard)
        throw degenerate_panel_error(
            "closed_form_linear: C (centered second-moment statistic) vanishes; all particles "
            "coincide at every grid time");
    if (std::abs(D - C) < guard)
        throw degenerate_panel_error(
            "closed_form_linear: D - C vanishes; panel is centered and the drift system is "
            "singular");

    EstimateResult result;
    result.method = EstimateMethod::closed_form;
    result.converged = true;
    result.theta_hat.theta1 = {(A - B) / (D - C), (A * D - B * C) / (C * C - C * D)};

    const double t11 = result.theta_hat.theta1[0];
    const double t12 = result.theta_hat.theta1[1];
    const double invN = 1.0 / static_cast<double>(pc.N);
    KahanSum rss;
    for (std::size_t j = 1; j <= pc.n; ++j) {
        const auto prev = pc.col(j - 1);
        const auto cur = pc.col(j);
        double mean = 0.0;
        for (double x : prev) mean += x;
        mean *= invN;
        for (std::size_t i = 0; i < pc.N; ++i) {
            const double x = prev[i];
            const double res = cur[i] - x + pc.delta_n * (t11 * x + t12 * (x - mean));
            rss.add(res * res);
        }
    }
    const double NT = static_cast<double>(pc.N) * pc.horizon();
    result.theta_hat.theta2 = {rss.sum / NT};
    // At the optimum the quadratic term collapses: S = N n (1 + log theta2).
    const double Nn = static_cast<double>(pc.N) * static_cast<double>(pc.n);
    result.contrast_at_opt = Nn * (1.0 + std::log(result.theta_hat.theta2[0]));
    return result;
}

// Profiled objective for multiplicative models: one drift pass yields
//   q(theta1) = sum (dX - delta b)^2 / c0,   L = sum log c0,
// from which S(theta1, theta2) = q/(delta theta2) + N n log(theta2) + L and
// the stationary theta2 = q / (N T).
struct ProfilePass {
    double q = 0.0;
    double log_c0 = 0.0;
};

ProfilePass profile_pass(const ModelSpec& model, std::span<const double> theta1,
                         const PanelColumns& pc, std::vector<double>& drift) {
    if (!model.c_zero)
        throw error("profile_theta2: model '" + model.name +
                    "' does not declare a multiplicative diffusion factor");
    KahanSum q, lc;
    for (std::size_t j = 1; j <= pc.n; ++j) {
        const auto prev = pc.col(j - 1);
        const auto cur = pc.col(j);
        eval_drift_all(model, theta1, prev, drift);
        for (std::size_t i = 0; i < pc.N; ++i) {
            const double c0 = model.c_zero(prev[i], prev);
            if (!(c0 > 0.0) || !std::isfinite(c0))
                throw assumption_violation("profile_theta2: multiplicative factor c0 <= 0 at particle " +
                                           std::to_string(i) + ", grid index " + std::to_string(j));
            const double r = cur[i] - prev[i] - pc.delta_n * drift[i];
            q.add(r * r / c0);
            lc.add(std::log(c0));
        }
    }
    return {q.sum, lc.sum};
}

struct StartResult {
    std::vector<double> x;
    double fx = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

bool better(const StartResult& a, const StartResult& b) {
    if (a.fx != b.fx) return a.fx < b.fx;
    return std::lexicographical_compare(a.x.begin(), a.x.end(), b.x.begin(), b.x.end());
}

StartResult run_multistart(const std::function<double(std::span<const double>)>& objective,
                           const ParamBox& box, const MinimizeOptions& opts,
                           std::size_t& total_iterations, bool& any_converged) {
    if (opts.starts < 1) throw error("minimize_contrast: need at least one start");
    NelderMeadOptions nm_opts;
    nm_opts.tol = opts.tol;
    nm_opts.max_iters = opts.max_iters;

    StartResult best;
    bool have_best = false;
    for (std::size_t s = 0; s < opts.starts; ++s) {
        const std::vector<double> x0 = s == 0 ? box.center() : halton_point(s, box);
        const NelderMeadResult run = nelder_mead(objective, x0, box, nm_opts);
        total_iterations += run.iterations;
        any_converged = any_converged || run.converged;
        StartResult sr{run.x, run.fx, run.iterations, run.converged};
        if (!have_best || better(sr, best)) {
            best = std::move(sr);
            have_best = true;
        }
    }
    return best;
}

} // namespace

double contrast_value(const ModelSpec& model, const ThetaVector& theta,
                      const TrajectoryPanel& panel) {
    check_theta_dims(model, theta, "contrast_value");
    if (panel.grid.n < 1) throw dimension_error("contrast_value: panel has no increments");
    PanelColumns pc(panel);
    std::vector<double> drift(pc.N), diffusion(pc.N);
    return contrast_core(model, theta.theta1, theta.theta2, pc, drift, diffusion);
}

std::vector<double> contrast_gradient(const ModelSpec& model, const ThetaVector& theta,
                                      const TrajectoryPanel& panel) {
    check_theta_dims(model, theta, "contrast_gradient");
    if (!model.has_analytic_grads && !model.fd_gradients_ok)
        throw error("contrast_gradient: model '" + model.name +
                    "' supports neither analytic nor finite-difference gradients");
    PanelColumns pc(panel);
    const auto p1 = static_cast<std::size_t>(model.p1);
    const auto p2 = static_cast<std::size_t>(model.p2);
    std::vector<double> drift(pc.N), diffusion(pc.N);
    std::vector<double> gb(p1), gc(p2);
    std::vector<KahanSum> grad(p1 + p2);
    const double delta = pc.delta_n;

    for (std::size_t j = 1; j <= pc.n; ++j) {
        const auto prev = pc.col(j - 1);
        const auto cur = pc.col(j);
        eval_drift_all(model, theta.theta1, prev, drift);
        eval_diffusion_all(model, theta.theta2, prev, diffusion);
        for (std::size_t i = 0; i < pc.N; ++i) {
            const double c = diffusion[i] * diffusion[i];
            check_c(c, i, j, model.name);
            const double x = prev[i];
            const double r = cur[i] - x - delta * drift[i];
            if (model.has_analytic_grads) {
                model.grad_drift_theta1(theta.theta1, x, prev, gb);
                model.grad_csq_theta2(theta.theta2, x, prev, gc);
            } else {
                fd_grad_drift(model, theta.theta1, x, prev, gb);
                fd_grad_csq(model, theta.theta2, x, prev, gc);
            }
            for (std::size_t k = 0; k < p1; ++k) grad[k].add(-2.0 * gb[k] * r / c);
            const double quad = r * r / (delta * c * c);
            for (std::size_t k = 0; k < p2; ++k) grad[p1 + k].add(gc[k] * (1.0 / c - quad));
        }
    }
    std::vector<double> out(p1 + p2);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = grad[k].sum;
    return out;
}

LinearSuffStats linear_sufficient_stats(const TrajectoryPanel& panel) {
    if (panel.grid.n < 1)
        throw dimension_error("linear_sufficient_stats: panel has no increments");
    return linear_stats(PanelColumns(panel));
}

EstimateResult closed_form_linear(const TrajectoryPanel& panel) {
    if (panel.grid.n < 1) throw dimension_error("closed_form_linear: panel has no increments");
    PanelColumns pc(panel);
    return closed_form_linear_impl(pc);
}

std::vector<double> profile_theta2(const ModelSpec& model, const TrajectoryPanel& panel,
                                   std::span<const double> theta1) {
    if (model.closed_form != ClosedForm::multiplicative_theta2 || model.p2 != 1)
        throw error("profile_theta2: model '" + model.name +
                    "' is not declared multiplicative in theta2");
    if (theta1.size() != static_cast<std::size_t>(model.p1))
        throw dimension_error("profile_theta2: theta1 length mismatch");
    PanelColumns pc(panel);
    std::vector<double> drift(pc.N);
    const ProfilePass pass = profile_pass(model, theta1, pc, drift);
    return {pass.q / (static_cast<double>(pc.N) * pc.horizon())};
}

EstimateResult minimize_contrast(const ModelSpec& model, const TrajectoryPanel& panel,
                                 const ParamBox& box, const MinimizeOptions& opts) {
    box.validate();
    const auto p1 = static_cast<std::size_t>(model.p1);
    const auto p2 = static_cast<std::size_t>(model.p2);
    if (box.dim() != p1 + p2)
        throw dimension_error("minimize_contrast: box dimension " + std::to_string(box.dim()) +
                              " does not match model parameter count " + std::to_string(p1 + p2));
    if (panel.grid.n < 1) throw dimension_error("minimize_contrast: panel has no increments");
    PanelColumns pc(panel);

    if (model.closed_form == ClosedForm::linear_model && !opts.force_numeric) {
        EstimateResult result = closed_form_linear_impl(pc);
        const std::vector<double> flat = result.theta_hat.flat();
        if (!box.contains(flat)) {
            const std::vector<double> clipped = box.clip(flat);
            result.theta_hat = ThetaVector::from_flat(clipped, p1, p2);
            std::vector<double> drift(pc.N), diffusion(pc.N);
            result.contrast_at_opt =
                contrast_core(model, result.theta_hat.theta1, result.theta_hat.theta2, pc, drift,
                              diffusion);
        }
        result.on_boundary = box.on_boundary(result.theta_hat.flat());
        return result;
    }

    std::vector<double> drift(pc.N), diffusion(pc.N);
    std::size_t total_iterations = 0;
    bool any_converged = false;

    if (model.closed_form == ClosedForm::multiplicative_theta2 && !opts.force_numeric) {
        ParamBox theta1_box{{box.lower.begin(), box.lower.begin() + static_cast<std::ptrdiff_t>(p1)},
                            {box.upper.begin(), box.upper.begin() + static_cast<std::ptrdiff_t>(p1)}};
        const double theta2_lo = box.lower[p1], theta2_hi = box.upper[p1];
        const double Nn = static_cast<double>(pc.N) * static_cast<double>(pc.n);
        const double NT = static_cast<double>(pc.N) * pc.horizon();

        const auto objective = [&](std::span<const double> theta1) {
            const ProfilePass pass = profile_pass(model, theta1, pc, drift);
            const double theta2 = std::clamp(pass.q / NT, theta2_lo, theta2_hi);
            return pass.q / (pc.delta_n * theta2) + Nn * std::log(theta2) + pass.log_c0;
        };

        const StartResult best =
            run_multistart(objective, theta1_box, opts, total_iterations, any_converged);
        const ProfilePass pass = profile_pass(model, best.x, pc, drift);
        const double theta2 = std::clamp(pass.q / NT, theta2_lo, theta2_hi);

        EstimateResult result;
        result.method = EstimateMethod::profiled;
        result.theta_hat.theta1 = best.x;
        result.theta_hat.theta2 = {theta2};
        result.contrast_at_opt = best.fx;
        result.iterations = total_iterations;
        result.converged = best.converged;
        result.starts_used = opts.starts;
        result.on_boundary = box.on_boundary(result.theta_hat.flat());
        if (!any_converged)
            throw nonconvergence_error("minimize_contrast: no start converged; best so far theta=" +
                                       format_vec(result.theta_hat.flat()) + ", contrast=" +
                                       std::to_string(best.fx));
        return result;
    }

    const auto objective = [&](std::span<const double> flat) {
        return contrast_core(model, flat.first(p1), flat.subspan(p1), pc, drift, diffusion);
    };
    const StartResult best = run_multistart(objective, box, opts, total_iterations, any_converged);

    EstimateResult result;
    result.method = EstimateMethod::nelder_mead;
    result.theta_hat = ThetaVector::from_flat(best.x, p1, p2);
    result.contrast_at_opt = best.fx;
    result.iterations = total_iterations;
    result.converged = best.converged;
    result.starts_used = opts.starts;
    result.on_boundary = box.on_boundary(best.x);
    if (!any_converged)
        throw nonconvergence_error("minimize_contrast: no start converged; best so far theta=" +
                                   format_vec(best.x) + ", contrast=" + std::to_string(best.fx));
    return result;
}

} // namespace mkv
