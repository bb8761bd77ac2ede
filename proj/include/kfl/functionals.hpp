#pragma once

#include <complex>
#include <vector>

#include "kfl/flow.hpp"
#include "kfl/spectral.hpp"
#include "kfl/trajectory.hpp"

namespace kfl {

// Scalar observables of one state: Y, Y_rs, Futaki of the projected gradient,
// lambda_min, kernel size, sup|gdot|, area, mu. Path quantities (nu and the
// gdot integral) are filled in by run_flow.
DiagnosticsRecord diagnose(const FlowState& s, int sector_cap);

// nu(t_k) = -(1/V) * trapezoid of Y over [0, t_k], using the recorded Y.
std::vector<double> mabuchi_path(const Trajectory& traj);

// int W(h) omega with h the Ricci potential of m. W must be holomorphic to
// within ||dbar W|| / ||W|| < 1e-8. Fields outside sector 0 give 0 because the
// integrand has a non-trivial S^1 phase.
std::complex<double> futaki(const ConformalMetric& m, const SectorVectorField& W);
std::complex<double> futaki(const ConformalMetric& m, const Eigen::VectorXd& h, const SectorVectorField& W);

// Residual of the Y evolution identity
//   Ydot = -int |grad h|^2 (R - mu) omega - int <grad h, (Ric - mu g) grad h> omega - 2 int |nablabar nablabar h|^2 omega
// per interior snapshot. `alternate` flips the sign of the first term, which is
// what the opposite sign of (omega)dot would produce.
std::vector<IdentityResidual> y_dot_residual(const Trajectory& traj);

// Integrated residual of
//   (|Lap h|^2)dot = Lap(|Lap h|^2) - 2 |grad Lap h|^2 + 2 |nabla nablabar h|^2 Lap h + 2 mu (Lap h)^2.
// `alternate` flips the sign of the mu term.
std::vector<IdentityResidual> delta_h_flow_residual(const Trajectory& traj);

double y_rs(const ConformalMetric& m, int r, int s);
double y_rs(const ConformalMetric& m, const Eigen::VectorXd& h, int r, int s);

}  // namespace kfl
