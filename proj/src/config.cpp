#include "kfl/config.hpp"

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "kfl/error.hpp"
#include "kfl/flow.hpp"

namespace kfl {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { fail(ErrorKind::config, "config: " + what); }

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) bad(where + " must be an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) bad("unknown key '" + it.key() + "' in " + where);
    }
}

double number(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) bad(std::string("'") + key + "' must be a number");
    return v.get<double>();
}

int integer(const json& obj, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) bad(std::string("'") + key + "' must be an integer");
    return v.get<int>();
}

bool boolean(const json& obj, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) bad(std::string("'") + key + "' must be true or false");
    return v.get<bool>();
}

std::vector<double> numbers(const json& obj, const char* key, std::vector<double> fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_array()) bad(std::string("'") + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const json& x : v) {
        if (!x.is_number()) bad(std::string("'") + key + "' must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

const json& section(const json& root, const char* key) {
    static const json empty = json::object();
    return root.contains(key) ? root.at(key) : empty;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        bad(std::string("malformed JSON: ") + e.what());
    }
    only_keys(root, "the top level",
              {"schema", "grid", "perturbation", "time", "spectral", "tolerances", "output", "seed"});
    if (root.contains("schema") && root.at("schema") != kRunConfigSchema) {
        bad(std::string("unsupported schema; expected ") + kRunConfigSchema);
    }

    RunConfig c;
    const json& grid = section(root, "grid");
    only_keys(grid, "grid", {"n"});
    c.flow.n = integer(grid, "n", c.flow.n);

    const json& pert = section(root, "perturbation");
    only_keys(pert, "perturbation", {"amplitude", "coefficients", "random_terms", "random_scale"});
    c.flow.initial.amplitude = number(pert, "amplitude", 0.0);
    c.flow.initial.coefficients = numbers(pert, "coefficients", {});
    c.random_terms = integer(pert, "random_terms", 0);
    c.random_scale = number(pert, "random_scale", 0.0);

    const json& time = section(root, "time");
    only_keys(time, "time", {"t_end", "cadence", "cfl", "dt", "stop_on_convergence"});
    c.flow.t_end = number(time, "t_end", c.flow.t_end);
    c.flow.cadence = number(time, "cadence", c.flow.cadence);
    c.flow.cfl = number(time, "cfl", c.flow.cfl);
    if (time.contains("dt") && !time.at("dt").is_null()) c.flow.dt = number(time, "dt", 0.0);
    c.flow.stop_on_convergence = boolean(time, "stop_on_convergence", true);

    const json& spectral = section(root, "spectral");
    only_keys(spectral, "spectral", {"sector_cap"});
    c.flow.sector_cap = integer(spectral, "sector_cap", c.flow.sector_cap);

    const json& tol = section(root, "tolerances");
    only_keys(tol, "tolerances", {"convergence", "h_residual", "y_residual", "delta_h_residual", "equivalence"});
    c.tolerances.convergence = number(tol, "convergence", c.tolerances.convergence);
    c.tolerances.h_residual = number(tol, "h_residual", c.tolerances.h_residual);
    c.tolerances.y_residual = number(tol, "y_residual", c.tolerances.y_residual);
    c.tolerances.delta_h_residual = number(tol, "delta_h_residual", c.tolerances.delta_h_residual);
    c.tolerances.equivalence = number(tol, "equivalence", c.tolerances.equivalence);
    c.flow.convergence_threshold = c.tolerances.convergence;

    const json& out = section(root, "output");
    only_keys(out, "output", {"dir", "snapshot_times"});
    if (out.contains("dir")) {
        if (!out.at("dir").is_string()) bad("'dir' must be a string");
        c.output_dir = out.at("dir").get<std::string>();
    }
    c.flow.snapshot_times = numbers(out, "snapshot_times", {});

    if (root.contains("seed")) {
        if (!root.at("seed").is_number_unsigned()) bad("'seed' must be a non-negative integer");
        c.seed = root.at("seed").get<std::uint64_t>();
    }

    if (c.flow.n < 32) bad("grid.n must be at least 32");
    if (c.random_terms < 0 || c.random_terms > 16) bad("perturbation.random_terms must be in [0, 16]");
    if (!(c.random_scale >= 0.0)) bad("perturbation.random_scale must be non-negative");
    for (double t : c.flow.snapshot_times) {
        if (!(t >= 0.0)) bad("snapshot times must be non-negative");
    }
    const Tolerances& t = c.tolerances;
    for (double v : {t.convergence, t.h_residual, t.y_residual, t.delta_h_residual, t.equivalence}) {
        if (!(v > 0.0)) bad("tolerances must be positive");
    }
    validate(resolved_flow_config(c));
    return c;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::config, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_file(path)); }

FlowConfig resolved_flow_config(const RunConfig& config) {
    FlowConfig flow = config.flow;
    if (config.random_terms > 0) {
        // Bit-level uniform draw so the coefficients do not depend on the
        // standard library's distribution implementation.
        std::mt19937_64 rng(config.seed);
        auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
        const std::size_t degree = static_cast<std::size_t>(config.random_terms);
        if (flow.initial.coefficients.size() < degree + 1) flow.initial.coefficients.resize(degree + 1, 0.0);
        for (std::size_t j = 1; j <= degree; ++j) {
            flow.initial.coefficients[j] += config.random_scale * (2.0 * uniform() - 1.0);
        }
    }
    return flow;
}

nlohmann::json to_json(const RunConfig& c) {
    json j;
    j["schema"] = kRunConfigSchema;
    j["grid"] = {{"n", c.flow.n}};
    j["perturbation"] = {{"amplitude", c.flow.initial.amplitude},
                         {"coefficients", c.flow.initial.coefficients},
                         {"random_terms", c.random_terms},
                         {"random_scale", c.random_scale}};
    j["time"] = {{"t_end", c.flow.t_end},
                 {"cadence", c.flow.cadence},
                 {"cfl", c.flow.cfl},
                 {"dt", c.flow.dt ? json(*c.flow.dt) : json(nullptr)},
                 {"stop_on_convergence", c.flow.stop_on_convergence}};
    j["spectral"] = {{"sector_cap", c.flow.sector_cap}};
    j["tolerances"] = {{"convergence", c.tolerances.convergence},
                       {"h_residual", c.tolerances.h_residual},
                       {"y_residual", c.tolerances.y_residual},
                       {"delta_h_residual", c.tolerances.delta_h_residual},
                       {"equivalence", c.tolerances.equivalence}};
    j["output"] = {{"dir", c.output_dir}, {"snapshot_times", c.flow.snapshot_times}};
    j["seed"] = c.seed;
    return j;
}

}  // namespace kfl
