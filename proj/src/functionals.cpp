#include "kfl/functionals.hpp"

#include <cmath>
#include <numbers>

#include "kfl/derivatives.hpp"
#include "kfl/error.hpp"
#include "kfl/geometry.hpp"

namespace kfl {

namespace {

Eigen::VectorXd scheme_laplacian(const ConformalMetric& m, const Eigen::VectorXd& f) {
    return 0.5 * ops::round_laplacian(m.grid(), f).array() / m.factor().array();
}

// Y = (1/2) sum w (h')^2 with nodal central differences. The conformal factor
// cancels, so dY/dt only sees hdot.
double y_semi_derivative(const ConformalMetric& m, const Eigen::VectorXd& h, const Eigen::VectorXd& hdot) {
    const Eigen::VectorXd dh = ops::central_difference(m.grid(), h, 1.0);
    const Eigen::VectorXd dhdot = ops::central_difference(m.grid(), hdot, 1.0);
    return m.grid().weights().dot(dh.cwiseProduct(dhdot));
}

}  // namespace

double y_rs(const ConformalMetric& m, const Eigen::VectorXd& h, int r, int s) {
    return l2_norm(m, derivative_stack(m, h, r, s));
}

double y_rs(const ConformalMetric& m, int r, int s) {
    if (r < 0 || s < 0 || r + s > kMaxStackOrder) {
        // Surface the capability error before doing any work.
        derivative_stack(m, Eigen::VectorXd::Zero(m.grid().size()), r, s);
    }
    const RicciPotential rp = ricci_potential(m);
    return y_rs(m, rp.h.values, r, s);
}

std::complex<double> futaki(const ConformalMetric& m, const Eigen::VectorXd& h, const SectorVectorField& W) {
    if (!W.grid) fail(ErrorKind::input, "futaki: field without a grid");
    require_same_grid(m.grid(), *W.grid, "futaki");
    const double mass = mass_norm(m, W);
    if (mass == 0.0) return 0.0;
    const double ratio = std::sqrt(std::max(0.0, dbar_energy(m, W)) / mass);
    if (!(ratio < 1e-8)) fail(ErrorKind::input, "futaki: vector field is not holomorphic (|dbar W|/|W| = " +
                                                  std::to_string(ratio) + ")");
    if (W.sector != 0) return 0.0;
    // W(h) omega = w e^u p h' / sqrt 2, paired on faces with the same flux
    // difference the scheme's Laplacian uses.
    const LatitudeGrid& g = m.grid();
    std::complex<double> acc = 0.0;
    for (int f = 1; f < g.size(); ++f) {
        const std::complex<double> ep =
            0.5 * (std::exp(m.u()[f - 1]) * W.profile[f - 1] + std::exp(m.u()[f]) * W.profile[f]);
        acc += std::numbers::sqrt2 * std::numbers::pi * g.flux_factor() * g.face_sin(f) * ep * (h[f] - h[f - 1]);
    }
    return acc;
}

std::complex<double> futaki(const ConformalMetric& m, const SectorVectorField& W) {
    const RicciPotential rp = ricci_potential(m);
    return futaki(m, rp.h.values, W);
}

DiagnosticsRecord diagnose(const FlowState& s, int sector_cap) {
    const ConformalMetric& m = s.metric;
    const Eigen::VectorXd& h = s.h.values;
    DiagnosticsRecord rec;
    rec.t = s.t;
    rec.step_index = s.step_index;
    rec.mu = s.mu;
    rec.area = m.area();
    rec.Y_rs[{1, 0}] = y_rs(m, h, 1, 0);
    rec.Y_rs[{1, 1}] = y_rs(m, h, 1, 1);
    rec.Y_rs[{2, 0}] = y_rs(m, h, 2, 0);
    rec.Y = rec.Y_rs[{1, 0}];

    const HolomorphicKernel kernel = holomorphic_kernel(m, sector_cap);
    rec.lambda_min = kernel.report.lambda_min;
    rec.kernel_dim = kernel.report.total_kernel_dim;
    const SectorVectorField projected = project_holo(m, gradient_field(m, h), kernel);
    rec.futaki = std::real(futaki_via_potential(m, projected));

    const ScalarField r = gauss_curvature(m);
    rec.sup_gdot = (r.values.array() - s.mu).abs().maxCoeff();
    return rec;
}

std::vector<double> mabuchi_path(const Trajectory& traj) {
    std::vector<double> nu;
    nu.reserve(traj.records.size());
    const double volume = 4.0 * std::numbers::pi;
    double acc = 0.0;
    for (std::size_t k = 0; k < traj.records.size(); ++k) {
        const DiagnosticsRecord& r = traj.records[k];
        if (!std::isfinite(r.Y)) fail(ErrorKind::input, "mabuchi_path: missing Y value");
        if (k > 0) {
            const DiagnosticsRecord& p = traj.records[k - 1];
            acc -= 0.5 * (r.t - p.t) * (r.Y + p.Y) / volume;
        }
        nu.push_back(acc);
    }
    return nu;
}

std::vector<IdentityResidual> y_dot_residual(const Trajectory& traj) {
    if (traj.triples.empty()) fail(ErrorKind::input, "y_dot_residual: need snapshots for centred differences");
    std::vector<IdentityResidual> out;
    for (const StateTriple& tr : traj.triples) {
        const ConformalMetric& m = tr.center.metric;
        const Eigen::VectorXd& h = tr.center.h.values;
        const double mu = tr.center.mu;
        const double ydot = (y_rs(tr.after.metric, tr.after.h.values, 1, 0) -
                             y_rs(tr.before.metric, tr.before.h.values, 1, 0)) /
                            (2.0 * tr.dt());

        const Eigen::VectorXd hdot = scheme_laplacian(m, h) + mu * h;
        const double ydot_semi = y_semi_derivative(m, h, hdot);

        const Eigen::VectorXd dev = scheme_laplacian(m, h);  // R - mu
        const Eigen::VectorXd grad2 = derivative_stack(m, h, 1, 0).values.cwiseAbs2();
        const double a = m.omega().dot(grad2.cwiseProduct(dev));
        const double b = l2_norm(m, derivative_stack(m, h, 2, 0));
        // In complex dimension one the Ricci term equals the first term.
        const double rhs = -a - a - 2.0 * b;
        const double rhs_alt = a - a - 2.0 * b;

        IdentityResidual r;
        r.t = tr.center.t;
        r.total = std::abs(ydot - rhs);
        r.time_part = std::abs(ydot - ydot_semi);
        r.grid_part = std::abs(ydot_semi - rhs);
        r.alternate = std::abs(ydot - rhs_alt);
        out.push_back(r);
    }
    return out;
}

std::vector<IdentityResidual> delta_h_flow_residual(const Trajectory& traj) {
    if (traj.triples.empty()) fail(ErrorKind::input, "delta_h_flow_residual: need snapshots for centred differences");
    std::vector<IdentityResidual> out;
    for (const StateTriple& tr : traj.triples) {
        const ConformalMetric& m = tr.center.metric;
        const Eigen::VectorXd& h = tr.center.h.values;
        const double mu = tr.center.mu;
        const Eigen::VectorXd f_before = scheme_laplacian(tr.before.metric, tr.before.h.values);
        const Eigen::VectorXd f_after = scheme_laplacian(tr.after.metric, tr.after.h.values);
        const Eigen::VectorXd f = scheme_laplacian(m, h);

        const Eigen::VectorXd sq_dot = (f_after.cwiseAbs2() - f_before.cwiseAbs2()) / (2.0 * tr.dt());
        const double lhs = m.integrate(sq_dot);

        // Semi-discrete: F' = Lap F + mu F + F^2 for F = Lap h.
        const Eigen::VectorXd f_dot = scheme_laplacian(m, f) + mu * f + f.cwiseAbs2();
        const double semi = m.integrate(2.0 * f.cwiseProduct(f_dot));

        const double lap_sq = m.integrate(scheme_laplacian(m, f.cwiseAbs2()));
        const double grad_f = l2_norm(m, derivative_stack(m, f, 1, 0));
        const Eigen::VectorXd mixed2 = derivative_stack(m, h, 1, 1).values.cwiseAbs2();
        const double cubic = m.integrate(mixed2.cwiseProduct(f));
        const double quad = m.integrate(f.cwiseAbs2());
        const double rhs = lap_sq - 2.0 * grad_f + 2.0 * cubic + 2.0 * mu * quad;
        const double rhs_alt = lap_sq - 2.0 * grad_f + 2.0 * cubic - 2.0 * mu * quad;

        IdentityResidual r;
        r.t = tr.center.t;
        r.total = std::abs(lhs - rhs);
        r.time_part = std::abs(lhs - semi);
        r.grid_part = std::abs(semi - rhs);
        r.alternate = std::abs(lhs - rhs_alt);
        out.push_back(r);
    }
    return out;
}

}  // namespace kfl
