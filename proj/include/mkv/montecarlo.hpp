#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mkv/contrast.hpp"
#include "mkv/inference.hpp"
#include "mkv/model.hpp"
#include "mkv/simulate.hpp"

namespace mkv {

// One experiment cell: particle count, horizon, observation step.
struct MCCell {
    std::size_t N = 50;
    double T = 50.0;
    double delta_n = 0.1;
};

struct MCConfig {
    std::string model = "linear";
    ThetaVector theta_true;
    std::size_t replications = 1000;
    std::uint64_t base_seed = 1;
    double euler_step = 0.01;
    Mu0Spec mu0;
    std::vector<MCCell> cells;
    ParamBox box; // empty -> default_box(model)
    MinimizeOptions minimize;
    std::size_t workers = 0; // 0 = hardware concurrency
    double alpha = 0.05;
};

// Estimation box used when the caller does not provide one.
ParamBox default_box(const ModelSpec& model);

// Raw output of one cell's replication loop. Failed replications
// (degeneracy, divergence, non-convergence) are excluded from `estimates`
// and counted; the surviving rows keep replication order, so results do not
// depend on the worker count.
struct ReplicationSet {
    std::vector<std::vector<double>> estimates; // flat theta per success
    std::vector<SigmaEstimate> sigmas;          // parallel to estimates when requested
    std::size_t replications = 0;
    std::size_t failures = 0;
};

// Replication r simulates with seed cell_base_seed + r and minimizes the
// contrast. `with_sigma` adds the plug-in covariance at the estimate.
ReplicationSet run_replications(const MCConfig& cfg, const MCCell& cell,
                                std::uint64_t cell_base_seed, bool with_sigma = false);

struct RmseBiasReport {
    std::vector<double> rmse;
    std::vector<double> bias;
    std::size_t replications_used = 0;
    std::size_t failures = 0;
};

RmseBiasReport rmse_bias_table(const std::vector<std::vector<double>>& estimates,
                               std::span<const double> theta_true, std::size_t failures = 0);

struct RejectionReport {
    double rate = 0.0; // fraction rejected at level alpha
    double se = 0.0;   // binomial standard error of `rate`
    std::size_t replications_used = 0;
    std::size_t failures = 0;
};

// Rejection rate of the non-interaction test over replications of the linear
// model with drift interaction theta12.
RejectionReport rejection_rate(const MCConfig& cfg, const MCCell& cell, double theta12,
                               double alpha, std::uint64_t cell_base_seed);

// Per-component KS check of the estimator against its Gaussian limit: each
// component is standardized by its plug-in standard error, then tested
// against N(0,1). Requires at least 50 replications.
struct NormalityReport {
    std::vector<double> ks_stat;
    std::vector<double> ks_p;
};

NormalityReport normality_check(const std::vector<std::vector<double>>& estimates,
                                std::span<const double> theta_true,
                                const std::vector<SigmaEstimate>& sigmas, std::size_t N,
                                double delta_n);

// ---------------------------------------------------------------------------
// Reference experiment tables
// ---------------------------------------------------------------------------

// Optional restriction of a table to some cells. Empty vectors mean "all".
// Seeds are derived from each cell's index in the *full* enumeration, so a
// filtered run reproduces the corresponding cells of the full run.
struct CellFilter {
    std::vector<std::size_t> N;
    std::vector<double> T;
    std::vector<double> delta_n;
    std::vector<double> theta12;

    bool pass(std::size_t N_, double T_, double delta_) const;
    bool pass_theta12(double value) const;
};

struct TableRow {
    std::size_t N = 0;
    double T = 0.0;
    double delta_n = 0.0;
    std::string component;
    double rmse = 0.0;
    double bias = 0.0;
    std::size_t failures = 0;
};

struct Table2Row {
    double theta12 = 0.0;
    std::size_t N = 0;
    double T = 0.0;
    double reject_rate_pct = 0.0;
    double se_pct = 0.0;
};

// Linear model, theta = (0.5, 1, 1), mu0 = dirac(1): RMSE/bias over
// delta_n in {0.1, 0.05, 0.01} x T in {50, 100} x N in {50, 100}.
std::vector<TableRow> mc_table1(std::size_t replications, std::uint64_t base_seed,
                                std::size_t workers, const CellFilter& filter = {});

// Non-interaction rejection rates, theta = (0.5, theta12, 1), delta_n = 0.1,
// theta12 in {0, 0.1, 0.25, 0.5, 1} x (N, T) in {(50,50),(100,50),(50,100),(100,100)}.
std::vector<Table2Row> mc_table2(std::size_t replications, std::uint64_t base_seed,
                                 std::size_t workers, double alpha = 0.05,
                                 const CellFilter& filter = {});

// Opinion model, theta = (-0.5, 2, 0.04), mu0 = N(0,1), delta_n = 0.1,
// (N, T) in {(50,50),(100,50),(50,100),(100,100)}.
std::vector<TableRow> mc_table3(std::size_t replications, std::uint64_t base_seed,
                                std::size_t workers, const CellFilter& filter = {});

std::vector<std::string> component_labels(std::size_t p1, std::size_t p2);

} // namespace mkv
