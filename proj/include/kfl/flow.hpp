#pragma once

#include <vector>

#include "kfl/error.hpp"
#include "kfl/trajectory.hpp"

namespace kfl {

// Raised when a step produces a non-finite or degenerate metric. Carries the
// last state that was still valid.
class BlowUpError : public Error {
public:
    BlowUpError(const std::string& what, FlowState last_valid)
        : Error(ErrorKind::blow_up, what), last_valid_(std::move(last_valid)) {}

    const FlowState& last_valid() const { return last_valid_; }

private:
    FlowState last_valid_;
};

// Largest dt for which RK4 stays inside its real-axis stability interval, from
// a Gershgorin bound on the linearised diffusion.
double stability_limit(const ConformalMetric& m);

// The default policy dt = cfl * h^2 * min e^{2u}.
double cfl_step(const ConformalMetric& m, double cfl);

// sup |R - mu|, which is |gdot|_g for the normalised flow in complex dimension one.
double sup_gdot(const FlowState& s);

// One RK4 step of u' = (mu - R(u)) / 2; h and mu are re-solved afterwards.
FlowState flow_step(const FlowState& s, double dt);

Trajectory run_flow(const FlowConfig& config);

void validate(const FlowConfig& config);

struct IdentityResidual {
    double t = 0.0;
    double total = 0.0;      // centred time difference vs the identity evaluated with independent stencils
    double time_part = 0.0;  // centred time difference vs the exact semi-discrete derivative
    double grid_part = 0.0;  // semi-discrete derivative vs the independent-stencil right-hand side
    double alternate = 0.0;  // total with the competing sign convention
};

// Residual of hdot = Lap h + mu h + c per interior snapshot (sup norm, with c
// the spatial-mean mismatch). `alternate` uses Lap h - mu h - c.
std::vector<IdentityResidual> h_flow_residual(const Trajectory& traj);

struct EquivalenceReport {
    double integral = 0.0;
    double ratio_min = 1.0;
    double ratio_max = 1.0;
    double envelope = 1.0;  // exp(integral)
    bool holds = true;
};

EquivalenceReport metric_equivalence_report(const Trajectory& traj, double tolerance = 1e-6);

double max_total(const std::vector<IdentityResidual>& series);

}  // namespace kfl
