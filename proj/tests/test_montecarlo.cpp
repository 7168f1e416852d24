#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "mkv/errors.hpp"
#include "mkv/montecarlo.hpp"
#include "mkv/stats.hpp"

using namespace mkv;

namespace {

MCConfig small_linear_config(std::size_t replications, std::uint64_t seed) {
    MCConfig cfg;
    cfg.model = "linear";
    cfg.theta_true = {{0.5, 1.0}, {1.0}};
    cfg.replications = replications;
    cfg.base_seed = seed;
    cfg.mu0 = Mu0Spec{Mu0Spec::Kind::dirac, 1.0, 0.0};
    return cfg;
}

} // namespace

TEST_CASE("rmse and bias on constructed estimate sets") {
    const std::vector<double> truth{0.5, 1.0, 1.0};
    // All replications equal to the truth.
    const std::vector<std::vector<double>> exact(5, truth);
    const RmseBiasReport zero = rmse_bias_table(exact, truth);
    for (double r : zero.rmse) CHECK(r == 0.0);
    for (double b : zero.bias) CHECK(b == 0.0);

    // Symmetric pair theta +- 1: bias 0, rmse 1.
    std::vector<std::vector<double>> pair{{1.5, 2.0, 2.0}, {-0.5, 0.0, 0.0}};
    const RmseBiasReport sym = rmse_bias_table(pair, truth);
    for (double b : sym.bias) CHECK(b == doctest::Approx(0.0).epsilon(1e-15));
    for (double r : sym.rmse) CHECK(r == doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS(rmse_bias_table({}, truth), error);
}

TEST_CASE("variance decomposition: rmse^2 >= bias^2") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> noise(0.3, 0.7);
    std::vector<std::vector<double>> estimates;
    for (int r = 0; r < 200; ++r) estimates.push_back({noise(gen), noise(gen)});
    const RmseBiasReport report = rmse_bias_table(estimates, std::vector<double>{0.0, 0.0});
    for (std::size_t k = 0; k < 2; ++k)
        CHECK(report.rmse[k] * report.rmse[k] - report.bias[k] * report.bias[k] >= -1e-12);
}

TEST_CASE("replication runs are bitwise reproducible") {
    const MCConfig cfg = small_linear_config(6, 42);
    const MCCell cell{10, 2.0, 0.1};
    const ReplicationSet a = run_replications(cfg, cell, cfg.base_seed);
    const ReplicationSet b = run_replications(cfg, cell, cfg.base_seed);
    REQUIRE(a.estimates.size() == b.estimates.size());
    for (std::size_t r = 0; r < a.estimates.size(); ++r) CHECK(a.estimates[r] == b.estimates[r]);
    CHECK(a.failures == 0);
}

TEST_CASE("worker count does not change results") {
    MCConfig cfg = small_linear_config(8, 7);
    const MCCell cell{10, 2.0, 0.1};
    cfg.workers = 1;
    const ReplicationSet serial = run_replications(cfg, cell, cfg.base_seed);
    cfg.workers = 4;
    const ReplicationSet pooled = run_replications(cfg, cell, cfg.base_seed);
    REQUIRE(serial.estimates.size() == pooled.estimates.size());
    for (std::size_t r = 0; r < serial.estimates.size(); ++r)
        CHECK(serial.estimates[r] == pooled.estimates[r]);
}

TEST_CASE("report aggregation is order independent") {
    std::mt19937_64 gen(8);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<std::vector<double>> estimates;
    for (int r = 0; r < 101; ++r) estimates.push_back({0.5 + 0.1 * noise(gen)});
    const RmseBiasReport base = rmse_bias_table(estimates, std::vector<double>{0.5});
    std::shuffle(estimates.begin(), estimates.end(), gen);
    const RmseBiasReport shuffled = rmse_bias_table(estimates, std::vector<double>{0.5});
    CHECK(shuffled.rmse[0] == doctest::Approx(base.rmse[0]).epsilon(1e-13));
    CHECK(shuffled.bias[0] == doctest::Approx(base.bias[0]).epsilon(1e-13));
}

TEST_CASE("all-failure surfaces as a harness error") {
    MCConfig cfg = small_linear_config(3, 11);
    cfg.minimize.force_numeric = true;
    cfg.minimize.max_iters = 1; // no start can converge
    const MCCell cell{5, 1.0, 0.1};
    CHECK_THROWS_AS(run_replications(cfg, cell, cfg.base_seed), error);
}

TEST_CASE("normality check on plugged quantiles and degenerate samples") {
    const std::size_t R = 500;
    const std::size_t N = 100;
    const double delta_n = 0.1;
    const std::vector<double> truth{0.5};
    SigmaEstimate sigma;
    sigma.p1 = 1;
    sigma.p2 = 0;
    sigma.sigma1 = {2.0};
    // One-component estimates: truth + se * z_r with z_r exact N(0,1) quantiles.
    const double se = standard_errors(SigmaEstimate{1, 1, {2.0}, {1.0}}, N, delta_n)[0];
    std::vector<std::vector<double>> estimates;
    std::vector<SigmaEstimate> sigmas;
    for (std::size_t r = 0; r < R; ++r) {
        const double z =
            normal_quantile((static_cast<double>(r) + 0.5) / static_cast<double>(R));
        estimates.push_back({truth[0] + se * z, 1.0});
        sigmas.push_back(SigmaEstimate{1, 1, {2.0}, {1.0}});
    }
    // Second component constant at the truth offset: KS must flag it.
    for (auto& row : estimates) row[1] = 1.0 + 0.5 * standard_errors(sigmas[0], N, delta_n)[1];
    const NormalityReport report =
        normality_check(estimates, std::vector<double>{0.5, 1.0}, sigmas, N, delta_n);
    CHECK(report.ks_stat[0] < 0.002);
    CHECK(report.ks_stat[1] >= 0.5);
    CHECK(report.ks_p[0] > 0.99);
    CHECK(report.ks_p[1] < 1e-8);

    estimates.resize(10);
    sigmas.resize(10);
    CHECK_THROWS_AS(normality_check(estimates, std::vector<double>{0.5, 1.0}, sigmas, N, delta_n),
                    error);
}

TEST_CASE("cell filters keep full-table seeds") {
    // Restricting table2 to one cell reproduces the same numbers as the same
    // cell inside a wider run.
    CellFilter only_cell;
    only_cell.theta12 = {0.0};
    only_cell.N = {50};
    only_cell.T = {50.0};
    const std::vector<Table2Row> narrow = mc_table2(10, 5, 0, 0.05, only_cell);
    CellFilter theta_only;
    theta_only.theta12 = {0.0};
    const std::vector<Table2Row> wide = mc_table2(10, 5, 0, 0.05, theta_only);
    REQUIRE(narrow.size() == 1);
    REQUIRE(wide.size() == 4);
    CHECK(narrow[0].reject_rate_pct == wide[0].reject_rate_pct);
    CHECK(narrow[0].N == 50);
    CHECK(narrow[0].theta12 == 0.0);
}

TEST_CASE("rejection rates come with binomial standard errors") {
    MCConfig cfg = small_linear_config(40, 3);
    const MCCell cell{20, 5.0, 0.1};
    const RejectionReport report = rejection_rate(cfg, cell, 0.0, 0.05, cfg.base_seed);
    CHECK(report.replications_used == 40);
    CHECK(report.rate >= 0.0);
    CHECK(report.rate <= 1.0);
    CHECK(report.se ==
          doctest::Approx(std::sqrt(report.rate * (1.0 - report.rate) / 40.0)).epsilon(1e-12));
    MCConfig bad = cfg;
    bad.model = "kuramoto";
    CHECK_THROWS_AS(rejection_rate(bad, cell, 0.0, 0.05, 1), config_error);
}
