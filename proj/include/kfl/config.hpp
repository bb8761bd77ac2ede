#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "kfl/trajectory.hpp"

namespace kfl {

inline constexpr const char* kRunConfigSchema = "kfl.run/1";

struct Tolerances {
    double convergence = 1e-9;
    // Identity residual limits, relative to the size of the quantity being
    // differentiated (see README). Exceeding any of them makes `run` exit 4.
    double h_residual = 5e-2;
    double y_residual = 5e-2;
    double delta_h_residual = 5e-2;
    double equivalence = 1e-6;
};

struct RunConfig {
    FlowConfig flow;
    int random_terms = 0;      // extra seeded coefficients added to the polynomial
    double random_scale = 0.0; // their magnitude bound
    std::uint64_t seed = 0;
    Tolerances tolerances;
    std::string output_dir = "out";
};

// Parses and validates the JSON run configuration. Unknown keys, wrong types,
// and out-of-range values raise config errors.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

nlohmann::json to_json(const RunConfig& config);

// The flow configuration with the seeded random coefficients folded in.
FlowConfig resolved_flow_config(const RunConfig& config);

std::string read_file(const std::string& path);

}  // namespace kfl
