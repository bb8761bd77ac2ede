#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kfl/grid.hpp"
#include "kfl/metric.hpp"

namespace kfl {

struct FlowState {
    double t = 0.0;
    ConformalMetric metric;
    ScalarField h;
    double mu = 1.0;
    long step_index = 0;
};

// Builds a state whose h and mu are solved from the metric.
FlowState make_state(ConformalMetric metric, double t = 0.0, long step_index = 0);

struct DiagnosticsRecord {
    double t = 0.0;
    long step_index = 0;
    double Y = 0.0;
    std::map<std::pair<int, int>, double> Y_rs;
    double nu = 0.0;
    double futaki = 0.0;
    double lambda_min = 0.0;
    int kernel_dim = 0;
    double sup_gdot = 0.0;
    double area = 0.0;
    double mu = 1.0;
    // int_0^t sup|gdot| dt, accumulated step by step.
    double gdot_integral = 0.0;
    // min and max over nodes of e^{2u(t)} / e^{2u(0)}.
    double ratio_min = 1.0;
    double ratio_max = 1.0;
};

struct InitialData {
    double amplitude = 0.0;
    std::vector<double> coefficients;  // ascending powers of cos(xi)
};

struct FlowConfig {
    int n = 256;
    InitialData initial;
    double t_end = 1.0;
    double cadence = 0.1;
    double cfl = 0.2;
    std::optional<double> dt;  // overrides the CFL policy when set
    int sector_cap = 8;
    double convergence_threshold = 1e-9;
    bool stop_on_convergence = true;
    std::vector<double> snapshot_times;
};

enum class RunStatus { completed, converged, blew_up };

const char* to_string(RunStatus status);

// A recorded state with its two step neighbours, for centred time differences.
struct StateTriple {
    FlowState before;
    FlowState center;
    FlowState after;

    double dt() const { return center.t - before.t; }
};

struct Trajectory {
    FlowConfig config;
    double dt = 0.0;
    RunStatus status = RunStatus::completed;
    std::string message;
    std::optional<FlowState> initial;
    std::optional<FlowState> last;
    std::vector<DiagnosticsRecord> records;
    std::vector<StateTriple> triples;
    std::vector<FlowState> snapshots;

    bool converged() const { return status == RunStatus::converged; }
};

// Keeps records, triples, and snapshots with t <= t_cut.
Trajectory truncated(const Trajectory& traj, double t_cut);

}  // namespace kfl
