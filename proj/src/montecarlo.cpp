#include "mkv/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <thread>

#include "mkv/errors.hpp"
#include "mkv/stats.hpp"

namespace mkv {

ParamBox default_box(const ModelSpec& model) {
    if (model.name == "linear") return {{-5.0, -5.0, 1e-4}, {5.0, 5.0, 25.0}};
    if (model.name == "kuramoto") return {{-10.0, 0.01}, {10.0, 10.0}};
    if (model.name == "opinion_smooth") return {{-0.99, 1e-3, 1e-6}, {1.0, 10.0, 25.0}};
    if (model.name == "opinion_indicator") return {{-5.0, 0.01, 0.01}, {5.0, 5.0, 10.0}};
    if (model.name == "pearson_meanfield") return {{-5.0, -5.0, -5.0, 0.01}, {5.0, 5.0, 5.0, 10.0}};
    if (model.name == "meanfield_ou")
        return {{-5.0, -5.0, -5.0, 0.01, 0.0}, {5.0, 5.0, 5.0, 10.0, 10.0}};
    throw error("default_box: no default estimation box for model '" + model.name + "'");
}

namespace {

ObservationGrid cell_grid(const MCCell& cell) {
    const double ratio = cell.T / cell.delta_n;
    const auto n = static_cast<long long>(std::llround(ratio));
    if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio))
        throw config_error("montecarlo: cell horizon T=" + std::to_string(cell.T) +
                           " is not an integer multiple of delta_n=" +
                           std::to_string(cell.delta_n));
    return ObservationGrid{static_cast<std::size_t>(n), cell.delta_n};
}

std::size_t resolve_workers(std::size_t requested, std::size_t jobs) {
    std::size_t w = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    return std::min(w, jobs);
}

// Runs `body(r)` for r in [0, jobs) on a small pool; each job writes only its
// own slot, so the aggregate is independent of scheduling.
void parallel_for(std::size_t jobs, std::size_t workers,
                  const std::function<void(std::size_t)>& body) {
    if (workers <= 1) {
        for (std::size_t r = 0; r < jobs; ++r) body(r);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t r = next.fetch_add(1); r < jobs; r = next.fetch_add(1)) body(r);
        });
    for (auto& t : pool) t.join();
}

} // namespace

ReplicationSet run_replications(const MCConfig& cfg, const MCCell& cell,
                                std::uint64_t cell_base_seed, bool with_sigma) {
    if (cfg.replications < 1) throw config_error("run_replications: need replications >= 1");
    const ModelSpec model = builtin_model(cfg.model);
    const ParamBox box = cfg.box.dim() ? cfg.box : default_box(model);
    box.validate();
    const ObservationGrid grid = cell_grid(cell);

    struct Slot {
        std::optional<std::vector<double>> estimate;
        std::optional<SigmaEstimate> sigma;
    };
    std::vector<Slot> slots(cfg.replications);

    parallel_for(cfg.replications, resolve_workers(cfg.workers, cfg.replications),
                 [&](std::size_t r) {
                     SimConfig sim;
                     sim.N = cell.N;
                     sim.T = cell.T;
                     sim.euler_step = cfg.euler_step;
                     sim.seed = cell_base_seed + r;
                     sim.mu0 = cfg.mu0;
                     try {
                         const TrajectoryPanel panel = simulate_panel(model, cfg.theta_true, sim, grid);
                         const EstimateResult fit = minimize_contrast(model, panel, box, cfg.minimize);
                         if (!fit.converged) return; // leave the slot empty -> failure
                         slots[r].estimate = fit.theta_hat.flat();
                         if (with_sigma)
                             slots[r].sigma = estimate_sigma(model, fit.theta_hat, panel);
                     } catch (const error&) {
                         // degenerate panel / divergence / non-convergence: counted below
                     }
                 });

    ReplicationSet out;
    out.replications = cfg.replications;
    for (auto& slot : slots) {
        if (!slot.estimate) {
            ++out.failures;
            continue;
        }
        out.estimates.push_back(std::move(*slot.estimate));
        if (with_sigma) out.sigmas.push_back(std::move(*slot.sigma));
    }
    if (out.estimates.empty())
        throw error("run_replications: every replication failed for model '" + cfg.model + "'");
    return out;
}

RmseBiasReport rmse_bias_table(const std::vector<std::vector<double>>& estimates,
                               std::span<const double> theta_true, std::size_t failures) {
    if (estimates.empty()) throw error("rmse_bias_table: no successful replications");
    const std::size_t p = theta_true.size();
    RmseBiasReport report;
    report.replications_used = estimates.size();
    report.failures = failures;
    report.rmse.resize(p);
    report.bias.resize(p);
    std::vector<double> dev(estimates.size()), sq(estimates.size());
    for (std::size_t k = 0; k < p; ++k) {
        for (std::size_t r = 0; r < estimates.size(); ++r) {
            if (estimates[r].size() != p)
                throw dimension_error("rmse_bias_table: estimate row length mismatch");
            dev[r] = estimates[r][k] - theta_true[k];
            sq[r] = dev[r] * dev[r];
        }
        const double m = static_cast<double>(estimates.size());
        report.bias[k] = pairwise_sum(dev) / m;
        report.rmse[k] = std::sqrt(pairwise_sum(sq) / m);
    }
    return report;
}

RejectionReport rejection_rate(const MCConfig& cfg, const MCCell& cell, double theta12,
                               double alpha, std::uint64_t cell_base_seed) {
    if (cfg.model != "linear")
        throw config_error("rejection_rate: the non-interaction test is defined for the linear model");
    const ModelSpec model = builtin_model(cfg.model);
    const ObservationGrid grid = cell_grid(cell);
    ThetaVector theta = cfg.theta_true;
    theta.theta1[1] = theta12;

    // -1 failure, 0 keep, 1 reject
    std::vector<int> slots(cfg.replications, -1);
    parallel_for(cfg.replications, resolve_workers(cfg.workers, cfg.replications),
                 [&](std::size_t r) {
                     SimConfig sim;
                     sim.N = cell.N;
                     sim.T = cell.T;
                     sim.euler_step = cfg.euler_step;
                     sim.seed = cell_base_seed + r;
                     sim.mu0 = cfg.mu0;
                     try {
                         const TrajectoryPanel panel = simulate_panel(model, theta, sim, grid);
                         const TestReport report = noninteraction_test(panel, alpha);
                         slots[r] = report.reject_at.at(alpha) ? 1 : 0;
                     } catch (const error&) {
                     }
                 });

    RejectionReport report;
    std::size_t rejected = 0;
    for (int s : slots) {
        if (s < 0)
            ++report.failures;
        else {
            ++report.replications_used;
            rejected += static_cast<std::size_t>(s);
        }
    }
    if (report.replications_used == 0)
        throw error("rejection_rate: every replication failed");
    const double used = static_cast<double>(report.replications_used);
    report.rate = static_cast<double>(rejected) / used;
    report.se = std::sqrt(report.rate * (1.0 - report.rate) / used);
    return report;
}

NormalityReport normality_check(const std::vector<std::vector<double>>& estimates,
                                std::span<const double> theta_true,
                                const std::vector<SigmaEstimate>& sigmas, std::size_t N,
                                double delta_n) {
    if (estimates.size() < 50)
        throw error("normality_check: need at least 50 replications, got " +
                    std::to_string(estimates.size()));
    if (sigmas.size() != estimates.size())
        throw dimension_error("normality_check: one covariance estimate per replication required");
    const std::size_t p = theta_true.size();
    std::vector<std::vector<double>> standardized(p, std::vector<double>(estimates.size()));
    for (std::size_t r = 0; r < estimates.size(); ++r) {
        const std::vector<double> se = standard_errors(sigmas[r], N, delta_n);
        for (std::size_t k = 0; k < p; ++k) {
            if (!(se[k] > 0.0))
                throw error("normality_check: zero standard error for component " +
                            std::to_string(k));
            standardized[k][r] = (estimates[r][k] - theta_true[k]) / se[k];
        }
    }
    NormalityReport report;
    for (std::size_t k = 0; k < p; ++k) {
        const auto [d, pv] = ks_test_normal(standardized[k]);
        report.ks_stat.push_back(d);
        report.ks_p.push_back(pv);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

namespace {

bool contains_size(const std::vector<std::size_t>& values, std::size_t v) {
    return values.empty() || std::find(values.begin(), values.end(), v) != values.end();
}

bool contains_close(const std::vector<double>& values, double v) {
    if (values.empty()) return true;
    return std::any_of(values.begin(), values.end(),
                       [v](double w) { return std::abs(w - v) <= 1e-12 * std::max(1.0, std::abs(v)); });
}

} // namespace

bool CellFilter::pass(std::size_t N_, double T_, double delta_) const {
    return contains_size(N, N_) && contains_close(T, T_) && contains_close(delta_n, delta_);
}

bool CellFilter::pass_theta12(double value) const { return contains_close(theta12, value); }

std::vector<std::string> component_labels(std::size_t p1, std::size_t p2) {
    std::vector<std::string> labels;
    for (std::size_t k = 1; k <= p1; ++k) labels.push_back("theta1_" + std::to_string(k));
    for (std::size_t k = 1; k <= p2; ++k) labels.push_back("theta2_" + std::to_string(k));
    return labels;
}

namespace {

std::vector<TableRow> rmse_table(const MCConfig& base, const std::vector<MCCell>& cells,
                                 const CellFilter& filter) {
    const auto labels =
        component_labels(base.theta_true.p1(), base.theta_true.p2());
    std::vector<TableRow> rows;
    for (std::size_t cell_index = 0; cell_index < cells.size(); ++cell_index) {
        const MCCell& cell = cells[cell_index];
        if (!filter.pass(cell.N, cell.T, cell.delta_n)) continue;
        const std::uint64_t cell_seed =
            base.base_seed + static_cast<std::uint64_t>(cell_index) * base.replications;
        const ReplicationSet reps = run_replications(base, cell, cell_seed);
        const RmseBiasReport report =
            rmse_bias_table(reps.estimates, base.theta_true.flat(), reps.failures);
        for (std::size_t k = 0; k < labels.size(); ++k)
            rows.push_back({cell.N, cell.T, cell.delta_n, labels[k], report.rmse[k],
                            report.bias[k], report.failures});
    }
    return rows;
}

const std::vector<MCCell>& table_nt_cells() {
    static const std::vector<MCCell> cells = {
        {50, 50.0, 0.1}, {100, 50.0, 0.1}, {50, 100.0, 0.1}, {100, 100.0, 0.1}};
    return cells;
}

} // namespace

std::vector<TableRow> mc_table1(std::size_t replications, std::uint64_t base_seed,
                                std::size_t workers, const CellFilter& filter) {
    MCConfig cfg;
    cfg.model = "linear";
    cfg.theta_true = {{0.5, 1.0}, {1.0}};
    cfg.replications = replications;
    cfg.base_seed = base_seed;
    cfg.workers = workers;
    cfg.mu0 = Mu0Spec{Mu0Spec::Kind::dirac, 1.0, 0.0};

    std::vector<MCCell> cells;
    for (double delta : {0.1, 0.05, 0.01})
        for (double T : {50.0, 100.0})
            for (std::size_t N : {std::size_t{50}, std::size_t{100}})
                cells.push_back({N, T, delta});
    return rmse_table(cfg, cells, filter);
}

std::vector<Table2Row> mc_table2(std::size_t replications, std::uint64_t base_seed,
                                 std::size_t workers, double alpha, const CellFilter& filter) {
    MCConfig cfg;
    cfg.model = "linear";
    cfg.theta_true = {{0.5, 0.0}, {1.0}};
    cfg.replications = replications;
    cfg.base_seed = base_seed;
    cfg.workers = workers;
    cfg.mu0 = Mu0Spec{Mu0Spec::Kind::dirac, 1.0, 0.0};

    std::vector<Table2Row> rows;
    std::size_t cell_index = 0;
    for (double theta12 : {0.0, 0.1, 0.25, 0.5, 1.0}) {
        for (const MCCell& cell : table_nt_cells()) {
            const std::size_t index = cell_index++;
            if (!filter.pass_theta12(theta12) || !filter.pass(cell.N, cell.T, cell.delta_n))
                continue;
            const std::uint64_t cell_seed =
                base_seed + static_cast<std::uint64_t>(index) * replications;
            const RejectionReport report = rejection_rate(cfg, cell, theta12, alpha, cell_seed);
            rows.push_back({theta12, cell.N, cell.T, 100.0 * report.rate, 100.0 * report.se});
        }
    }
    return rows;
}

std::vector<TableRow> mc_table3(std::size_t replications, std::uint64_t base_seed,
                                std::size_t workers, const CellFilter& filter) {
    MCConfig cfg;
    cfg.model = "opinion_smooth";
    cfg.theta_true = {{-0.5, 2.0}, {0.04}};
    cfg.replications = replications;
    cfg.base_seed = base_seed;
    cfg.workers = workers;
    cfg.mu0 = Mu0Spec{Mu0Spec::Kind::gaussian, 0.0, 1.0};
    return rmse_table(cfg, table_nt_cells(), filter);
}

} // namespace mkv
