#include "mkv/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "mkv/errors.hpp"

namespace mkv {

namespace {

using nlohmann::json;

class Problems {
public:
    void add(const std::string& message) { items_.push_back(message); }
    bool empty() const { return items_.empty(); }
    [[noreturn]] void raise() const {
        std::string joined = "config:";
        for (const auto& item : items_) joined += "\n  - " + item;
        throw config_error(joined);
    }

private:
    std::vector<std::string> items_;
};

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where, Problems& problems) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) {
                known = true;
                break;
            }
        if (!known) problems.add(where + ": unknown key '" + key + "'");
    }
}

bool is_multiple(double value, double step) {
    const double ratio = value / step;
    const double rounded = std::round(ratio);
    return rounded >= 1.0 && std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio);
}

ExperimentConfig parse_json(const json& j) {
    Problems problems;
    if (!j.is_object()) {
        problems.add("top level must be a JSON object");
        problems.raise();
    }
    check_keys(j,
               {"schema_version", "model", "theta", "theta_true", "replications", "base_seed",
                "euler_step", "mu0", "N", "T", "delta_n", "cells", "box", "starts", "workers",
                "alpha"},
               "top level", problems);

    ExperimentConfig cfg;
    auto& mc = cfg.mc;

    const auto get_number = [&](const char* key, auto& target, auto lower_ok,
                                const std::string& constraint) {
        if (!j.contains(key)) return;
        if (!j[key].is_number()) {
            problems.add(std::string(key) + ": must be a number");
            return;
        }
        const double v = j[key].get<double>();
        if (!lower_ok(v)) {
            problems.add(std::string(key) + ": " + constraint);
            return;
        }
        target = static_cast<std::remove_reference_t<decltype(target)>>(v);
    };

    if (j.contains("schema_version")) {
        if (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != 1)
            problems.add("schema_version: must be 1");
        else
            cfg.schema_version = 1;
    }

    ModelSpec model;
    bool have_model = false;
    if (!j.contains("model")) {
        problems.add("model: required");
    } else if (!j["model"].is_string()) {
        problems.add("model: must be a string");
    } else {
        try {
            model = builtin_model(j["model"].get<std::string>());
            mc.model = model.name;
            have_model = true;
        } catch (const std::exception& e) {
            problems.add(std::string("model: ") + e.what());
        }
    }

    if (j.contains("theta") && j.contains("theta_true"))
        problems.add("theta: give either 'theta' or 'theta_true', not both");
    const char* theta_key = j.contains("theta") ? "theta" : "theta_true";
    std::vector<double> theta_flat;
    if (!j.contains(theta_key)) {
        problems.add("theta: required");
    } else if (!j[theta_key].is_array()) {
        problems.add("theta: must be an array of numbers");
    } else {
        for (const auto& v : j[theta_key]) {
            if (!v.is_number()) {
                problems.add("theta: must be an array of numbers");
                theta_flat.clear();
                break;
            }
            theta_flat.push_back(v.get<double>());
        }
    }
    if (have_model && !theta_flat.empty()) {
        const auto expected = static_cast<std::size_t>(model.p1 + model.p2);
        if (theta_flat.size() != expected)
            problems.add("theta: model '" + mc.model + "' expects " + std::to_string(expected) +
                         " components, got " + std::to_string(theta_flat.size()));
        else
            mc.theta_true = ThetaVector::from_flat(theta_flat, model.p1, model.p2);
    }

    get_number("replications", mc.replications, [](double v) { return v >= 1; }, "must be >= 1");
    get_number("base_seed", mc.base_seed, [](double v) { return v >= 0; }, "must be >= 0");
    get_number("euler_step", mc.euler_step, [](double v) { return v > 0; }, "must be > 0");
    get_number("starts", mc.minimize.starts, [](double v) { return v >= 1; }, "must be >= 1");
    get_number("workers", mc.workers, [](double v) { return v >= 0; }, "must be >= 0");
    get_number("alpha", mc.alpha, [](double v) { return v > 0 && v < 1; }, "must be in (0,1)");

    mc.mu0 = Mu0Spec{Mu0Spec::Kind::dirac, 1.0, 0.0};
    if (j.contains("mu0")) {
        if (!j["mu0"].is_string()) {
            problems.add("mu0: must be a string like dirac:1");
        } else {
            try {
                mc.mu0 = Mu0Spec::parse(j["mu0"].get<std::string>());
            } catch (const std::exception& e) {
                problems.add(std::string("mu0: ") + e.what());
            }
        }
    }

    // Cells: one inline (N, T, delta_n) or an explicit list.
    const bool inline_cell = j.contains("N") || j.contains("T") || j.contains("delta_n");
    if (inline_cell && j.contains("cells"))
        problems.add("cells: give either top-level N/T/delta_n or 'cells', not both");
    if (inline_cell) {
        MCCell cell;
        bool ok = true;
        if (!j.contains("N") || !j.contains("T") || !j.contains("delta_n")) {
            problems.add("cells: top-level cell needs all of N, T, delta_n");
            ok = false;
        }
        if (ok) {
            get_number("N", cell.N, [](double v) { return v >= 1; }, "must be >= 1");
            get_number("T", cell.T, [](double v) { return v > 0; }, "must be > 0");
            get_number("delta_n", cell.delta_n, [](double v) { return v > 0; }, "must be > 0");
            mc.cells.push_back(cell);
        }
    } else if (j.contains("cells")) {
        if (!j["cells"].is_array() || j["cells"].empty()) {
            problems.add("cells: must be a nonempty array");
        } else {
            std::size_t index = 0;
            for (const auto& c : j["cells"]) {
                const std::string where = "cells[" + std::to_string(index++) + "]";
                if (!c.is_object()) {
                    problems.add(where + ": must be an object {N, T, delta_n}");
                    continue;
                }
                check_keys(c, {"N", "T", "delta_n"}, where, problems);
                MCCell cell;
                bool ok = true;
                for (const char* key : {"N", "T", "delta_n"})
                    if (!c.contains(key) || !c[key].is_number()) {
                        problems.add(where + ": needs numeric " + key);
                        ok = false;
                    }
                if (!ok) continue;
                cell.N = static_cast<std::size_t>(c["N"].get<double>());
                cell.T = c["T"].get<double>();
                cell.delta_n = c["delta_n"].get<double>();
                mc.cells.push_back(cell);
            }
        }
    } else {
        problems.add("cells: required (top-level N/T/delta_n or a 'cells' array)");
    }

    for (std::size_t k = 0; k < mc.cells.size(); ++k) {
        const MCCell& cell = mc.cells[k];
        const std::string where = "cells[" + std::to_string(k) + "]";
        if (cell.N < 1) problems.add(where + ": N must be >= 1");
        if (!(cell.T > 0) || !(cell.delta_n > 0)) continue;
        if (!is_multiple(cell.T, cell.delta_n))
            problems.add(where + ": T=" + std::to_string(cell.T) +
                         " is not an integer multiple of delta_n=" + std::to_string(cell.delta_n));
        if (!is_multiple(cell.delta_n, mc.euler_step))
            problems.add(where + ": delta_n=" + std::to_string(cell.delta_n) +
                         " is not an integer multiple of euler_step=" +
                         std::to_string(mc.euler_step));
    }

    if (j.contains("box")) {
        const auto& b = j["box"];
        if (!b.is_object()) {
            problems.add("box: must be an object {lower, upper}");
        } else {
            check_keys(b, {"lower", "upper"}, "box", problems);
            const auto read_bounds = [&](const char* key, std::vector<double>& target) {
                if (!b.contains(key) || !b[key].is_array()) {
                    problems.add("box: needs numeric array '" + std::string(key) + "'");
                    return;
                }
                for (const auto& v : b[key]) {
                    if (!v.is_number()) {
                        problems.add("box: needs numeric array '" + std::string(key) + "'");
                        target.clear();
                        return;
                    }
                    target.push_back(v.get<double>());
                }
            };
            read_bounds("lower", mc.box.lower);
            read_bounds("upper", mc.box.upper);
            if (!mc.box.lower.empty() && mc.box.lower.size() == mc.box.upper.size()) {
                for (std::size_t k = 0; k < mc.box.lower.size(); ++k)
                    if (!(mc.box.lower[k] < mc.box.upper[k]))
                        problems.add("box: lower[" + std::to_string(k) + "] must be < upper[" +
                                     std::to_string(k) + "]");
                if (have_model && mc.box.dim() != static_cast<std::size_t>(model.p1 + model.p2))
                    problems.add("box: dimension must match the model parameter count");
            } else if (mc.box.lower.size() != mc.box.upper.size()) {
                problems.add("box: lower and upper must have equal length");
            }
        }
    }

    // theta_true must be admissible: inside the box and passing the positive-
    // diffusion guard at a probe state.
    if (have_model && mc.theta_true.size() == static_cast<std::size_t>(model.p1 + model.p2)) {
        const std::vector<double> flat = mc.theta_true.flat();
        if (mc.box.dim() && !mc.box.contains(flat))
            problems.add("theta: out-of-box theta_true");
        ParticleState probe{{0.0, 1.0}, 0.0};
        try {
            eval_diffusion(model, mc.theta_true.theta2, 0, probe);
            eval_diffusion(model, mc.theta_true.theta2, 1, probe);
        } catch (const error& e) {
            problems.add("theta: box violation, diffusion coefficient not positive at theta2 (" +
                         std::string(e.what()) + ")");
        }
    }

    if (!problems.empty()) problems.raise();
    return cfg;
}

} // namespace

ExperimentConfig parse_config_text(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_json(j);
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("config: cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << is.rdbuf();
    return parse_config_text(buffer.str());
}

} // namespace mkv
