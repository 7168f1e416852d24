// mkvfit: simulate interacting particle systems, fit drift/diffusion
// parameters by contrast minimization, test for interaction, and reproduce
// the reference Monte Carlo tables.

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "mkv/config.hpp"
#include "mkv/contrast.hpp"
#include "mkv/errors.hpp"
#include "mkv/inference.hpp"
#include "mkv/montecarlo.hpp"
#include "mkv/panel_io.hpp"

namespace {

constexpr const char* kVersion = "mkvfit 0.1.0";

using nlohmann::json;

std::vector<double> parse_theta_list(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        try {
            std::size_t pos = 0;
            values.push_back(std::stod(token, &pos));
            if (pos != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
            throw mkv::config_error("theta: cannot parse component '" + token + "'");
        }
    }
    if (values.empty()) throw mkv::config_error("theta: empty list");
    return values;
}

mkv::ThetaVector theta_for_model(const mkv::ModelSpec& model, const std::string& text) {
    const std::vector<double> flat = parse_theta_list(text);
    if (flat.size() != static_cast<std::size_t>(model.p1 + model.p2))
        throw mkv::config_error("theta: model '" + model.name + "' expects " +
                                std::to_string(model.p1 + model.p2) + " components (theta1 then theta2), got " +
                                std::to_string(flat.size()));
    return mkv::ThetaVector::from_flat(flat, model.p1, model.p2);
}

// Box components come as repeated "lo..hi" options, theta1 components first.
mkv::ParamBox parse_box(const std::vector<std::string>& parts) {
    mkv::ParamBox box;
    for (const std::string& part : parts) {
        const auto sep = part.find("..");
        if (sep == std::string::npos)
            throw mkv::config_error("box: expected lo..hi, got '" + part + "'");
        try {
            box.lower.push_back(std::stod(part.substr(0, sep)));
            box.upper.push_back(std::stod(part.substr(sep + 2)));
        } catch (const std::exception&) {
            throw mkv::config_error("box: cannot parse '" + part + "'");
        }
    }
    box.validate();
    return box;
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("MKV_SEED")) {
        std::uint64_t value = 0;
        const auto res = std::from_chars(env, env + std::strlen(env), value);
        if (res.ec == std::errc{} && *res.ptr == '\0') return value;
        throw mkv::config_error("MKV_SEED: cannot parse '" + std::string(env) + "'");
    }
    return 1;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(out_path, std::ios::binary);
    if (!os) throw mkv::error("cannot open output file '" + out_path + "'");
    os << text;
}

void format_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

std::string table_csv(const std::vector<mkv::TableRow>& rows) {
    std::string csv = "N,T,delta_n,component,rmse,bias,failures\n";
    for (const auto& row : rows) {
        csv += std::to_string(row.N) + ",";
        format_double(csv, row.T);
        csv += ",";
        format_double(csv, row.delta_n);
        csv += "," + row.component + ",";
        format_double(csv, row.rmse);
        csv += ",";
        format_double(csv, row.bias);
        csv += "," + std::to_string(row.failures) + "\n";
    }
    return csv;
}

std::string table2_csv(const std::vector<mkv::Table2Row>& rows) {
    std::string csv = "theta12,N,T,reject_rate_pct,se_pct\n";
    for (const auto& row : rows) {
        format_double(csv, row.theta12);
        csv += "," + std::to_string(row.N) + ",";
        format_double(csv, row.T);
        csv += ",";
        format_double(csv, row.reject_rate_pct);
        csv += ",";
        format_double(csv, row.se_pct);
        csv += "\n";
    }
    return csv;
}

json estimate_json(const mkv::EstimateResult& fit) {
    json out;
    out["theta_hat"] = fit.theta_hat.flat();
    out["contrast"] = fit.contrast_at_opt;
    switch (fit.method) {
        case mkv::EstimateMethod::closed_form: out["method"] = "closed_form"; break;
        case mkv::EstimateMethod::profiled: out["method"] = "profiled"; break;
        case mkv::EstimateMethod::nelder_mead: out["method"] = "nelder_mead"; break;
    }
    out["converged"] = fit.converged;
    out["iterations"] = fit.iterations;
    out["starts_used"] = fit.starts_used;
    out["on_boundary"] = fit.on_boundary;
    if (fit.standard_errors) out["se"] = *fit.standard_errors;
    return out;
}

mkv::TrajectoryPanel load_panel_checked(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw mkv::config_error("panel: file '" + path + "' does not exist");
    return mkv::load_panel(path);
}

int run(int argc, char** argv) {
    CLI::App app{"Simulation and contrast estimation for interacting particle systems"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // --- simulate ---
    auto* sim_cmd = app.add_subcommand("simulate", "Euler-Maruyama panel of the coupled system");
    std::string sim_model = "linear", sim_theta, sim_mu0 = "dirac:1", sim_out;
    std::size_t sim_N = 50;
    double sim_T = 50.0, sim_dt_obs = 0.1, sim_dt_euler = 0.01;
    std::uint64_t sim_seed = 0;
    sim_cmd->add_option("--model", sim_model, "Model name")->capture_default_str();
    sim_cmd->add_option("--theta", sim_theta, "Comma-joined parameters, theta1 then theta2")
        ->required();
    sim_cmd->add_option("--N", sim_N, "Particle count")->capture_default_str();
    sim_cmd->add_option("--T", sim_T, "Horizon")->capture_default_str();
    sim_cmd->add_option("--dt-obs", sim_dt_obs, "Observation step delta_n")->capture_default_str();
    sim_cmd->add_option("--dt-euler", sim_dt_euler, "Fine Euler step")->capture_default_str();
    sim_cmd->add_option("--mu0", sim_mu0, "Initial law: dirac:c | gaussian:m,s | uniform:a,b")
        ->capture_default_str();
    auto* sim_seed_opt = sim_cmd->add_option("--seed", sim_seed, "RNG seed (default MKV_SEED or 1)");
    sim_cmd->add_option("--out", sim_out, "Output path (.csv or .mkvp; default stdout CSV)");

    // --- estimate ---
    auto* est_cmd = app.add_subcommand("estimate", "Minimize the contrast over a parameter box");
    std::string est_model = "linear", est_panel, est_out;
    std::vector<std::string> est_box;
    std::size_t est_starts = 8;
    bool est_se = false, est_numeric = false;
    est_cmd->add_option("--model", est_model, "Model name")->capture_default_str();
    est_cmd->add_option("--panel", est_panel, "Panel file (CSV or MKVP)")->required();
    est_cmd->add_option("--box", est_box,
                        "Per-component bounds lo..hi, theta1 first (default: model box)");
    est_cmd->add_option("--starts", est_starts, "Multi-start count")->capture_default_str();
    est_cmd->add_flag("--se", est_se, "Attach plug-in standard errors");
    est_cmd->add_flag("--numeric", est_numeric, "Force the numeric path (skip closed forms)");
    est_cmd->add_option("--out", est_out, "Output path (default stdout JSON)");

    // --- test ---
    auto* test_cmd = app.add_subcommand("test", "Non-interaction test on a linear-model panel");
    std::string test_panel, test_out;
    double test_alpha = 0.05;
    test_cmd->add_option("--panel", test_panel, "Panel file")->required();
    test_cmd->add_option("--alpha", test_alpha, "Significance level")->capture_default_str();
    test_cmd->add_option("--out", test_out, "Output path (default stdout JSON)");

    // --- mc ---
    auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo replication tables");
    mc_cmd->require_subcommand(1);
    std::size_t mc_reps = 1000, mc_workers = 0;
    std::uint64_t mc_seed = 0;
    double mc_alpha = 0.05;
    std::string mc_out;
    std::vector<std::size_t> mc_filter_N;
    std::vector<double> mc_filter_T, mc_filter_delta, mc_filter_theta12;
    auto add_mc_options = [&](CLI::App* cmd, bool with_alpha, bool with_theta12) {
        cmd->add_option("--replications", mc_reps, "Replications per cell")->capture_default_str();
        auto* seed_opt = cmd->add_option("--seed", mc_seed, "Base seed (default MKV_SEED or 1)");
        cmd->add_option("--workers", mc_workers, "Worker threads (0 = auto)")->capture_default_str();
        cmd->add_option("--out", mc_out, "Output path (default stdout CSV)");
        cmd->add_option("--N", mc_filter_N, "Restrict to these N values");
        cmd->add_option("--T", mc_filter_T, "Restrict to these T values");
        cmd->add_option("--delta-n", mc_filter_delta, "Restrict to these delta_n values");
        if (with_theta12)
            cmd->add_option("--theta12", mc_filter_theta12, "Restrict to these theta12 values");
        if (with_alpha)
            cmd->add_option("--alpha", mc_alpha, "Significance level")->capture_default_str();
        return seed_opt;
    };
    auto* t1_cmd = mc_cmd->add_subcommand("table1", "Linear-model RMSE/bias table");
    auto* t1_seed = add_mc_options(t1_cmd, false, false);
    auto* t2_cmd = mc_cmd->add_subcommand("table2", "Non-interaction rejection rates");
    auto* t2_seed = add_mc_options(t2_cmd, true, true);
    auto* t3_cmd = mc_cmd->add_subcommand("table3", "Opinion-model RMSE/bias table");
    auto* t3_seed = add_mc_options(t3_cmd, false, false);
    auto* run_cmd = mc_cmd->add_subcommand("run", "RMSE/bias table from a JSON experiment config");
    std::string run_config, run_out;
    run_cmd->add_option("--config", run_config, "JSON experiment config")->required();
    run_cmd->add_option("--out", run_out, "Output path (default stdout CSV)");

    // --- diagnose ---
    auto* diag_cmd = app.add_subcommand("diagnose", "Diagnostics");
    diag_cmd->require_subcommand(1);
    auto* ij_cmd = diag_cmd->add_subcommand("ij", "Monte Carlo identifiability functionals I, J");
    std::string ij_model = "linear", ij_theta, ij_theta0, ij_mu0 = "dirac:1", ij_out;
    std::size_t ij_N = 10000;
    double ij_T = 1.0, ij_dt_obs = 0.01, ij_dt_euler = 0.01;
    std::uint64_t ij_seed = 0;
    ij_cmd->add_option("--model", ij_model, "Model name")->capture_default_str();
    ij_cmd->add_option("--theta", ij_theta, "Evaluation parameters")->required();
    ij_cmd->add_option("--theta0", ij_theta0, "True parameters used for simulation")->required();
    ij_cmd->add_option("--N", ij_N, "Auxiliary particle count")->capture_default_str();
    ij_cmd->add_option("--T", ij_T, "Horizon")->capture_default_str();
    ij_cmd->add_option("--dt-obs", ij_dt_obs, "Observation step")->capture_default_str();
    ij_cmd->add_option("--dt-euler", ij_dt_euler, "Fine Euler step")->capture_default_str();
    ij_cmd->add_option("--mu0", ij_mu0, "Initial law")->capture_default_str();
    auto* ij_seed_opt = ij_cmd->add_option("--seed", ij_seed, "RNG seed (default MKV_SEED or 1)");
    ij_cmd->add_option("--out", ij_out, "Output path (default stdout JSON)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (sim_cmd->parsed()) {
        const mkv::ModelSpec model = mkv::builtin_model(sim_model);
        const mkv::ThetaVector theta = theta_for_model(model, sim_theta);
        mkv::SimConfig cfg;
        cfg.N = sim_N;
        cfg.T = sim_T;
        cfg.euler_step = sim_dt_euler;
        cfg.seed = sim_seed_opt->count() ? sim_seed : default_seed();
        cfg.mu0 = mkv::Mu0Spec::parse(sim_mu0);
        const auto n = static_cast<std::size_t>(std::llround(sim_T / sim_dt_obs));
        const mkv::ObservationGrid grid{n, sim_dt_obs};
        if (std::abs(grid.horizon() - sim_T) > 1e-9 * std::max(1.0, sim_T))
            throw mkv::config_error("simulate: T is not an integer multiple of --dt-obs");
        const mkv::TrajectoryPanel panel = mkv::simulate_panel(model, theta, cfg, grid);
        if (sim_out.empty()) {
            std::ostringstream os;
            mkv::write_panel_csv(panel, os);
            std::cout << os.str();
        } else {
            mkv::save_panel(panel, sim_out);
        }
        return 0;
    }

    if (est_cmd->parsed()) {
        const mkv::ModelSpec model = mkv::builtin_model(est_model);
        const mkv::TrajectoryPanel panel = load_panel_checked(est_panel);
        const mkv::ParamBox box = est_box.empty() ? mkv::default_box(model) : parse_box(est_box);
        mkv::MinimizeOptions opts;
        opts.starts = est_starts;
        opts.force_numeric = est_numeric;
        mkv::EstimateResult fit = mkv::minimize_contrast(model, panel, box, opts);
        if (est_se) {
            const mkv::SigmaEstimate sigma = mkv::estimate_sigma(model, fit.theta_hat, panel);
            fit.standard_errors = mkv::standard_errors(sigma, panel.N, panel.grid.delta_n);
        }
        emit(estimate_json(fit).dump(2) + "\n", est_out);
        return 0;
    }

    if (test_cmd->parsed()) {
        const mkv::TrajectoryPanel panel = load_panel_checked(test_panel);
        const mkv::TestReport report = mkv::noninteraction_test(panel, test_alpha);
        json out;
        out["z"] = report.z;
        out["v"] = report.v;
        out["p_value"] = report.p_value;
        out["theta12_hat"] = report.theta12_hat;
        json rejects;
        for (const auto& [level, reject] : report.reject_at) {
            std::string key;
            format_double(key, level);
            rejects[key] = reject;
        }
        out["reject_at"] = rejects;
        emit(out.dump(2) + "\n", test_out);
        return 0;
    }

    if (ij_cmd->parsed()) {
        const mkv::ModelSpec model = mkv::builtin_model(ij_model);
        const mkv::ThetaVector theta = theta_for_model(model, ij_theta);
        const mkv::ThetaVector theta0 = theta_for_model(model, ij_theta0);
        mkv::SimConfig cfg;
        cfg.N = ij_N;
        cfg.T = ij_T;
        cfg.euler_step = ij_dt_euler;
        cfg.seed = ij_seed_opt->count() ? ij_seed : default_seed();
        cfg.mu0 = mkv::Mu0Spec::parse(ij_mu0);
        const auto n = static_cast<std::size_t>(std::llround(ij_T / ij_dt_obs));
        const mkv::ObservationGrid grid{n, ij_dt_obs};
        if (std::abs(grid.horizon() - ij_T) > 1e-9 * std::max(1.0, ij_T))
            throw mkv::config_error("diagnose ij: T is not an integer multiple of --dt-obs");
        const auto [I, J] = mkv::identifiability_functionals(model, theta, theta0, cfg, grid);
        json out;
        out["I"] = I;
        out["J"] = J;
        emit(out.dump(2) + "\n", ij_out);
        return 0;
    }

    if (mc_cmd->parsed()) {
        if (run_cmd->parsed()) {
            const mkv::ExperimentConfig cfg = mkv::parse_config(run_config);
            const auto labels =
                mkv::component_labels(cfg.mc.theta_true.p1(), cfg.mc.theta_true.p2());
            std::vector<mkv::TableRow> rows;
            for (std::size_t cell_index = 0; cell_index < cfg.mc.cells.size(); ++cell_index) {
                const mkv::MCCell& cell = cfg.mc.cells[cell_index];
                const std::uint64_t cell_seed =
                    cfg.mc.base_seed + static_cast<std::uint64_t>(cell_index) * cfg.mc.replications;
                const mkv::ReplicationSet reps = mkv::run_replications(cfg.mc, cell, cell_seed);
                const mkv::RmseBiasReport report =
                    mkv::rmse_bias_table(reps.estimates, cfg.mc.theta_true.flat(), reps.failures);
                for (std::size_t k = 0; k < labels.size(); ++k)
                    rows.push_back({cell.N, cell.T, cell.delta_n, labels[k], report.rmse[k],
                                    report.bias[k], report.failures});
            }
            emit(table_csv(rows), run_out);
            return 0;
        }
        mkv::CellFilter filter;
        filter.N = mc_filter_N;
        filter.T = mc_filter_T;
        filter.delta_n = mc_filter_delta;
        filter.theta12 = mc_filter_theta12;
        if (t1_cmd->parsed()) {
            const std::uint64_t seed = t1_seed->count() ? mc_seed : default_seed();
            emit(table_csv(mkv::mc_table1(mc_reps, seed, mc_workers, filter)), mc_out);
            return 0;
        }
        if (t2_cmd->parsed()) {
            const std::uint64_t seed = t2_seed->count() ? mc_seed : default_seed();
            emit(table2_csv(mkv::mc_table2(mc_reps, seed, mc_workers, mc_alpha, filter)), mc_out);
            return 0;
        }
        if (t3_cmd->parsed()) {
            const std::uint64_t seed = t3_seed->count() ? mc_seed : default_seed();
            emit(table_csv(mkv::mc_table3(mc_reps, seed, mc_workers, filter)), mc_out);
            return 0;
        }
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const mkv::config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const mkv::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
