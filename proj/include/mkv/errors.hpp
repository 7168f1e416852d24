#pragma once

#include <stdexcept>
#include <string>

namespace mkv {

// Base class for everything this library throws on purpose.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Mismatched vector lengths, incompatible grids, wrong panel shapes.
class dimension_error : public error {
public:
    explicit dimension_error(const std::string& what) : error(what) {}
};

// A coefficient evaluator produced a non-finite value; carries (theta, i).
class model_eval_error : public error {
public:
    model_eval_error(const std::string& what, int particle)
        : error(what), particle_index(particle) {}
    int particle_index = -1;
};

// Runtime violation of a model assumption (e.g. non-positive squared diffusion,
// singular covariance block).
class assumption_violation : public error {
public:
    explicit assumption_violation(const std::string& what) : error(what) {}
};

// State left the admissible region during integration; carries first bad (i, t).
class simulation_diverged : public error {
public:
    simulation_diverged(const std::string& what, int particle, double time)
        : error(what), particle_index(particle), at_time(time) {}
    int particle_index = -1;
    double at_time = 0.0;
};

// A closed-form denominator vanished; message names the quantity.
class degenerate_panel_error : public error {
public:
    explicit degenerate_panel_error(const std::string& what) : error(what) {}
};

// Every optimizer start failed; best-so-far is still reported in the message.
class nonconvergence_error : public error {
public:
    explicit nonconvergence_error(const std::string& what) : error(what) {}
};

// Invalid experiment configuration; message aggregates all violations.
class config_error : public error {
public:
    explicit config_error(const std::string& what) : error(what) {}
};

} // namespace mkv
