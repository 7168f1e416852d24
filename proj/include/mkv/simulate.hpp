#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mkv/model.hpp"
#include "mkv/rng.hpp"

namespace mkv {

// Initial law of the particles: point mass, Gaussian, or uniform.
struct Mu0Spec {
    enum class Kind { dirac, gaussian, uniform };
    Kind kind = Kind::dirac;
    double a = 0.0; // dirac: location; gaussian: mean; uniform: lower
    double b = 1.0; // gaussian: sd; uniform: upper

    void validate() const;
    static Mu0Spec parse(const std::string& text); // "dirac:1", "gaussian:0,1", "uniform:0,2"
    std::string to_string() const;
};

struct SimConfig {
    std::size_t N = 1;
    double T = 1.0;
    double euler_step = 0.01; // fine integration step h
    std::uint64_t seed = 1;
    Mu0Spec mu0;

    void validate() const;
};

// Observation grid t_j = j * delta_n, j = 0..n; delta_n must be an integer
// multiple of the fine Euler step so subsampling is exact.
struct ObservationGrid {
    std::size_t n = 1;
    double delta_n = 1.0;

    double horizon() const { return static_cast<double>(n) * delta_n; }
    static ObservationGrid from_horizon(double T, std::size_t n);
    // Fine steps per observation interval; throws when euler_step does not
    // divide delta_n (relative tolerance 1e-9).
    std::size_t substeps(double euler_step) const;
};

// N x (n+1) panel of observed positions, data(i, j) = X^i at t_j, row-major.
struct TrajectoryPanel {
    std::size_t N = 0;
    ObservationGrid grid;
    std::string model_name;
    std::uint64_t seed = 0;
    std::vector<double> data; // N * (n+1)

    double& at(std::size_t i, std::size_t j) { return data[i * (grid.n + 1) + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * (grid.n + 1) + j]; }
    std::size_t columns() const { return grid.n + 1; }
    // Column j gathered into `out` (length N).
    void column(std::size_t j, std::span<double> out) const;
};

// N iid draws from mu0, one per particle stream (seed, i).
ParticleState sample_mu0(const Mu0Spec& spec, std::size_t N, std::uint64_t seed);
// Single draw from an existing stream; consumes zero draws for a point mass.
double sample_mu0_one(const Mu0Spec& spec, ParticleRng& rng);

// Euler-Maruyama path of the coupled N-particle system, restricted to the
// observation grid. Deterministic given (model, theta, cfg, grid): particle i
// consumes its own stream (cfg.seed, i), initial draw first, then one Gaussian
// per fine step. Coefficients are evaluated at the previous step's full state
// (synchronous update).
TrajectoryPanel simulate_panel(const ModelSpec& model, const ThetaVector& theta,
                               const SimConfig& cfg, const ObservationGrid& grid);

// Interacting system of size N next to an approximation of its mean-field
// limit: a pool of `mean_field_pool` particles evolved with the same dynamics
// (the pool's empirical measure standing in for the limit law). The first N
// pool particles share Brownian increments and initial values with the
// interacting system, so the pointwise gap measures the coupling error.
// Returns (interacting panel, mean-field panel restricted to the first N).
std::pair<TrajectoryPanel, TrajectoryPanel> simulate_coupled_independent(
    const ModelSpec& model, const ThetaVector& theta, const SimConfig& cfg,
    const ObservationGrid& grid, std::size_t mean_field_pool);

} // namespace mkv
