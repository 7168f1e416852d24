#pragma once

#include <string>

#include "mkv/montecarlo.hpp"

namespace mkv {

// Experiment description loaded from JSON. Mirrors MCConfig; unknown keys are
// rejected and every violation is reported in one aggregated error.
struct ExperimentConfig {
    int schema_version = 1;
    MCConfig mc;
};

// Parse and validate a JSON config file. Accepted keys:
//   schema_version, model, theta (alias theta_true), replications, base_seed,
//   euler_step, mu0, N/T/delta_n (single cell) or cells[{N,T,delta_n}],
//   box{lower[],upper[]}, starts, workers, alpha.
// Defaults: schema_version 1, replications 1000, base_seed 1, euler_step 0.01,
// mu0 "dirac:1", starts 8, workers 0 (auto).
ExperimentConfig parse_config(const std::string& path);

// Same validation on an in-memory JSON document.
ExperimentConfig parse_config_text(const std::string& json_text);

} // namespace mkv
