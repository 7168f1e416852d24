#include "mkv/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "mkv/errors.hpp"

namespace mkv {

namespace {
constexpr double kBlowupThreshold = 1e12;
}

void Mu0Spec::validate() const {
    switch (kind) {
        case Kind::dirac:
            break;
        case Kind::gaussian:
            if (!(b > 0.0)) throw config_error("mu0: gaussian sd must be > 0");
            break;
        case Kind::uniform:
            if (!(a < b)) throw config_error("mu0: uniform requires lo < hi");
            break;
    }
}

Mu0Spec Mu0Spec::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
    Mu0Spec spec;
    try {
        if (head == "dirac") {
            spec.kind = Kind::dirac;
            spec.a = std::stod(args);
        } else if (head == "gaussian" || head == "normal") {
            spec.kind = Kind::gaussian;
            const auto comma = args.find(',');
            if (comma == std::string::npos) throw std::invalid_argument("two arguments needed");
            spec.a = std::stod(args.substr(0, comma));
            spec.b = std::stod(args.substr(comma + 1));
        } else if (head == "uniform") {
            spec.kind = Kind::uniform;
            const auto comma = args.find(',');
            if (comma == std::string::npos) throw std::invalid_argument("two arguments needed");
            spec.a = std::stod(args.substr(0, comma));
            spec.b = std::stod(args.substr(comma + 1));
        } else {
            throw std::invalid_argument("unknown initial law");
        }
    } catch (const std::exception&) {
        throw config_error("mu0: cannot parse '" + text +
                           "' (expected dirac:c, gaussian:mean,sd or uniform:lo,hi)");
    }
    spec.validate();
    return spec;
}

std::string Mu0Spec::to_string() const {
    switch (kind) {
        case Kind::dirac:
            return "dirac:" + std::to_string(a);
        case Kind::gaussian:
            return "gaussian:" + std::to_string(a) + "," + std::to_string(b);
        case Kind::uniform:
            return "uniform:" + std::to_string(a) + "," + std::to_string(b);
    }
    return "";
}

void SimConfig::validate() const {
    if (N < 1) throw config_error("SimConfig: N must be >= 1");
    if (!(euler_step > 0.0) || euler_step > T)
        throw config_error("SimConfig: need 0 < euler_step <= T");
    mu0.validate();
}

ObservationGrid ObservationGrid::from_horizon(double T, std::size_t n) {
    if (n < 1 || !(T > 0.0)) throw config_error("ObservationGrid: need n >= 1 and T > 0");
    return ObservationGrid{n, T / static_cast<double>(n)};
}

std::size_t ObservationGrid::substeps(double euler_step) const {
    if (!(euler_step > 0.0)) throw config_error("ObservationGrid: euler_step must be > 0");
    const double ratio = delta_n / euler_step;
    const auto m = static_cast<long long>(std::llround(ratio));
    if (m < 1 || std::abs(ratio - static_cast<double>(m)) > 1e-9 * std::max(1.0, ratio))
        throw config_error("ObservationGrid: delta_n (" + std::to_string(delta_n) +
                           ") is not an integer multiple of euler_step (" +
                           std::to_string(euler_step) + ")");
    return static_cast<std::size_t>(m);
}

void TrajectoryPanel::column(std::size_t j, std::span<double> out) const {
    if (out.size() != N) throw dimension_error("TrajectoryPanel::column: span size mismatch");
    for (std::size_t i = 0; i < N; ++i) out[i] = at(i, j);
}

double sample_mu0_one(const Mu0Spec& spec, ParticleRng& rng) {
    switch (spec.kind) {
        case Mu0Spec::Kind::dirac:
            return spec.a;
        case Mu0Spec::Kind::gaussian:
            return spec.a + spec.b * rng.next_normal();
        case Mu0Spec::Kind::uniform:
            return spec.a + (spec.b - spec.a) * rng.next_uniform01();
    }
    return 0.0;
}

ParticleState sample_mu0(const Mu0Spec& spec, std::size_t N, std::uint64_t seed) {
    spec.validate();
    if (N < 1) throw config_error("sample_mu0: N must be >= 1");
    ParticleState state;
    state.positions.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        ParticleRng rng(seed, i);
        state.positions[i] = sample_mu0_one(spec, rng);
    }
    return state;
}

TrajectoryPanel simulate_panel(const ModelSpec& model, const ThetaVector& theta,
                               const SimConfig& cfg, const ObservationGrid& grid) {
    cfg.validate();
    if (theta.p1() != static_cast<std::size_t>(model.p1) ||
        theta.p2() != static_cast<std::size_t>(model.p2))
        throw dimension_error("simulate_panel: theta dimensions do not match model '" +
                              model.name + "'");
    if (std::abs(grid.horizon() - cfg.T) > 1e-9 * std::max(1.0, cfg.T))
        throw config_error("simulate_panel: grid horizon differs from cfg.T");
    const std::size_t substeps = grid.substeps(cfg.euler_step);
    const double dt = grid.delta_n / static_cast<double>(substeps);
    const double sqrt_dt = std::sqrt(dt);
    const std::size_t N = cfg.N;

    TrajectoryPanel panel;
    panel.N = N;
    panel.grid = grid;
    panel.model_name = model.name;
    panel.seed = cfg.seed;
    panel.data.resize(N * (grid.n + 1));

    std::vector<ParticleRng> streams;
    streams.reserve(N);
    std::vector<double> state(N);
    for (std::size_t i = 0; i < N; ++i) {
        streams.emplace_back(cfg.seed, i);
        state[i] = sample_mu0_one(cfg.mu0, streams.back());
        panel.at(i, 0) = state[i];
    }

    std::vector<double> drift(N), diffusion(N);
    for (std::size_t j = 1; j <= grid.n; ++j) {
        for (std::size_t s = 0; s < substeps; ++s) {
            eval_drift_all(model, theta.theta1, state, drift);
            eval_diffusion_all(model, theta.theta2, state, diffusion);
            const double t = (static_cast<double>(j - 1) * static_cast<double>(substeps) +
                              static_cast<double>(s)) *
                             dt;
            for (std::size_t i = 0; i < N; ++i) {
                // Zero diffusion is admitted here (degenerate ODE limits);
                // estimation-side code still requires c > 0.
                if (!(diffusion[i] >= 0.0) || !std::isfinite(diffusion[i]))
                    throw assumption_violation(
                        "simulate_panel: diffusion coefficient negative or non-finite at particle " +
                        std::to_string(i) + ", t=" + std::to_string(t));
                state[i] += drift[i] * dt + diffusion[i] * sqrt_dt * streams[i].next_normal();
                if (!std::isfinite(state[i]) || std::abs(state[i]) > kBlowupThreshold)
                    throw simulation_diverged("simulate_panel: state blow-up (|X| > 1e12)",
                                              static_cast<int>(i), t + dt);
            }
        }
        for (std::size_t i = 0; i < N; ++i) panel.at(i, j) = state[i];
    }
    return panel;
}

std::pair<TrajectoryPanel, TrajectoryPanel> simulate_coupled_independent(
    const ModelSpec& model, const ThetaVector& theta, const SimConfig& cfg,
    const ObservationGrid& grid, std::size_t mean_field_pool) {
    if (mean_field_pool < cfg.N)
        throw config_error("simulate_coupled_independent: mean_field_pool must be >= N");
    TrajectoryPanel interacting = simulate_panel(model, theta, cfg, grid);

    SimConfig pool_cfg = cfg;
    pool_cfg.N = mean_field_pool;
    TrajectoryPanel pool = simulate_panel(model, theta, pool_cfg, grid);

    // Keep only the rows coupled to the interacting system.
    TrajectoryPanel meanfield;
    meanfield.N = cfg.N;
    meanfield.grid = grid;
    meanfield.model_name = model.name;
    meanfield.seed = cfg.seed;
    meanfield.data.assign(pool.data.begin(),
                          pool.data.begin() + static_cast<std::ptrdiff_t>(cfg.N * (grid.n + 1)));
    return {std::move(interacting), std::move(meanfield)};
}

} // namespace mkv
