#include "doctest.h"

#include <sstream>

#include "mkv/errors.hpp"
#include "mkv/panel_io.hpp"

using namespace mkv;

namespace {

TrajectoryPanel seeded_panel(std::uint64_t seed, std::size_t N = 7, std::size_t n = 23) {
    SimConfig cfg;
    cfg.N = N;
    cfg.T = static_cast<double>(n) * 0.1;
    cfg.euler_step = 0.01;
    cfg.seed = seed;
    cfg.mu0 = Mu0Spec{Mu0Spec::Kind::gaussian, 0.0, 1.0};
    const ObservationGrid grid{n, 0.1};
    return simulate_panel(builtin_model("linear"), ThetaVector{{0.5, 1.0}, {1.0}}, cfg, grid);
}

} // namespace

TEST_CASE("csv round trip is lossless and re-serialization is byte-identical") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const TrajectoryPanel panel = seeded_panel(seed);
        std::ostringstream first;
        write_panel_csv(panel, first);

        std::istringstream in(first.str());
        const TrajectoryPanel parsed = read_panel_csv(in);
        CHECK(parsed.N == panel.N);
        CHECK(parsed.grid.n == panel.grid.n);
        CHECK(parsed.data == panel.data);

        std::ostringstream second;
        write_panel_csv(parsed, second);
        CHECK(first.str() == second.str());
    }
}

TEST_CASE("mkvp round trip preserves the payload bit for bit") {
    const TrajectoryPanel panel = seeded_panel(9, 5, 40);
    std::ostringstream first(std::ios::binary);
    write_panel_mkvp(panel, first);
    std::istringstream in(first.str(), std::ios::binary);
    const TrajectoryPanel parsed = read_panel_mkvp(in);
    CHECK(parsed.N == panel.N);
    CHECK(parsed.grid.n == panel.grid.n);
    CHECK(parsed.data == panel.data);
    std::ostringstream second(std::ios::binary);
    write_panel_mkvp(parsed, second);
    CHECK(first.str() == second.str());
}

TEST_CASE("csv parser rejects malformed input") {
    {
        std::istringstream empty("");
        CHECK_THROWS_AS(read_panel_csv(empty), error);
    }
    {
        std::istringstream bad_header("t,x1\n0,1\n1,2\n");
        CHECK_THROWS_AS(read_panel_csv(bad_header), error);
    }
    {
        std::istringstream ragged("time,x1,x2\n0,1,2\n0.5,3\n");
        CHECK_THROWS_AS(read_panel_csv(ragged), error);
    }
    {
        std::istringstream uneven_grid("time,x1\n0,1\n0.5,2\n1.7,3\n");
        CHECK_THROWS_AS(read_panel_csv(uneven_grid), error);
    }
    {
        std::istringstream not_number("time,x1\n0,1\n0.5,abc\n");
        CHECK_THROWS_AS(read_panel_csv(not_number), error);
    }
}

TEST_CASE("mkvp reader rejects corrupt streams") {
    {
        std::istringstream junk("NOPE", std::ios::binary);
        CHECK_THROWS_AS(read_panel_mkvp(junk), error);
    }
    const TrajectoryPanel panel = seeded_panel(4, 3, 5);
    std::ostringstream os(std::ios::binary);
    write_panel_mkvp(panel, os);
    const std::string full = os.str();
    std::istringstream truncated(full.substr(0, full.size() / 2), std::ios::binary);
    CHECK_THROWS_AS(read_panel_mkvp(truncated), error);
}
