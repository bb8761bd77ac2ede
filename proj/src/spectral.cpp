#include "kfl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "kfl/derivatives.hpp"
#include "kfl/error.hpp"
#include "kfl/functionals.hpp"
#include "kfl/geometry.hpp"

namespace kfl {

namespace {

using cd = std::complex<double>;

void check_field(const ConformalMetric& m, const SectorVectorField& V, const char* context) {
    if (!V.grid) fail(ErrorKind::input, std::string(context) + ": field without a grid");
    require_same_grid(m.grid(), *V.grid, context);
    if (V.profile.size() != m.grid().size()) fail(ErrorKind::input, std::string(context) + ": profile length mismatch");
}

// Face coefficients: D- = -(c + b) p_i + (c - b) p_{i+1}, with c = 1/h and b = l'/2.
struct Face {
    double weight;
    double b;
};

Face face(const ConformalMetric& m, int sector, int f) {
    const LatitudeGrid& g = m.grid();
    const double h = g.spacing();
    const double du = g.flux_factor() * (m.u()[f] - m.u()[f - 1]) / h;
    const double lp = du + (g.face_cos(f) + sector) / g.face_sin(f);
    return {std::numbers::pi * g.face_sin(f) * h, 0.5 * lp};
}

int kernel_count(const Eigen::VectorXd& ev) {
    const int limit = std::min<int>(4, static_cast<int>(ev.size()) - 1);
    for (int m = 1; m <= limit; ++m) {
        if (std::abs(ev[m - 1]) < kKernelRatio * ev[m]) return m;
    }
    return 0;
}

// Solves D- p = 0 face by face in log form, so faces where the recursion
// would amplify are handled as contractions from the other side.
Eigen::VectorXcd kernel_vector(const ConformalMetric& m, int sector) {
    const int n = m.grid().size();
    const double c = 1.0 / m.grid().spacing();
    const double neg_inf = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd logp(n), sign(n);
    logp[0] = 0.0;
    sign[0] = 1.0;
    for (int f = 1; f < n; ++f) {
        const Face fc = face(m, sector, f);
        const double num = c + fc.b;  // multiplies p_{f-1}
        const double den = c - fc.b;  // multiplies p_f
        if (den == 0.0) {
            // p_{f-1} must vanish, and with it everything north of this face.
            for (int i = 0; i < f; ++i) logp[i] = neg_inf;
            logp[f] = 0.0;
            sign[f] = 1.0;
            continue;
        }
        logp[f] = (num == 0.0) ? neg_inf : logp[f - 1] + std::log(std::abs(num)) - std::log(std::abs(den));
        sign[f] = sign[f - 1] * ((num < 0) != (den < 0) ? -1.0 : 1.0);
    }
    const double top = logp.maxCoeff();
    Eigen::VectorXcd p(n);
    for (int i = 0; i < n; ++i) p[i] = sign[i] * std::exp(logp[i] - top);
    return p;
}

Eigen::VectorXd curvature_deviation(const ConformalMetric& m, double* mu_out = nullptr) {
    const ScalarField r = gauss_curvature(m);
    const double mu = m.integrate(r.values) / m.area();
    if (mu_out) *mu_out = mu;
    return (r.values.array() - mu).matrix();
}

}  // namespace

SectorVectorField make_sector_field(GridPtr grid, int sector, Eigen::VectorXcd profile) {
    if (!grid) fail(ErrorKind::input, "sector field without a grid");
    if (profile.size() != grid->size()) fail(ErrorKind::input, "sector field profile length mismatch");
    if (!profile.allFinite()) fail(ErrorKind::input, "sector field profile is not finite");
    return SectorVectorField{std::move(grid), sector, std::move(profile)};
}

SectorVectorField gradient_field(const ConformalMetric& m, const Eigen::VectorXd& h) {
    const DerivativeStack d = derivative_stack(m, h, 1, 0);
    return SectorVectorField{m.grid_ptr(), 0, d.values};
}

SectorForms sector_forms(const ConformalMetric& m, int sector) {
    const int n = m.grid().size();
    const double c = 1.0 / m.grid().spacing();
    const double two_pi = 2.0 * std::numbers::pi;
    SectorForms out;
    out.sector = sector;
    out.dbar_diag = Eigen::VectorXd::Zero(n);
    out.dbar_off = Eigen::VectorXd::Zero(n - 1);
    out.nabla_diag = Eigen::VectorXd::Zero(n);
    out.nabla_off = Eigen::VectorXd::Zero(n - 1);
    for (int f = 1; f < n; ++f) {
        const Face fc = face(m, sector, f);
        const double plus = c + fc.b, minus = c - fc.b;
        out.dbar_diag[f - 1] += fc.weight * plus * plus;
        out.dbar_diag[f] += fc.weight * minus * minus;
        out.dbar_off[f - 1] -= fc.weight * plus * minus;
        out.nabla_diag[f - 1] += fc.weight * minus * minus;
        out.nabla_diag[f] += fc.weight * plus * plus;
        out.nabla_off[f - 1] -= fc.weight * minus * plus;
    }
    // Half-cell closures at the poles. They carry the vanishing order of the
    // profile (|k+1| north, |k-1| south) and make the Bochner-Kodaira
    // difference telescope exactly.
    const int k = sector;
    if (k <= -2) out.dbar_diag[0] += two_pi * std::abs(k + 1);
    if (k >= 2) out.dbar_diag[n - 1] += two_pi * (k - 1);
    if (k >= 0) out.nabla_diag[0] += two_pi * (k + 1);
    if (k <= 0) out.nabla_diag[n - 1] += two_pi * (1 - k);
    out.mass = m.omega();
    return out;
}

namespace {

// Sum of squared face residuals plus the pole closures. Equal to the
// tridiagonal forms, but without their cancellation, so exact kernel vectors
// evaluate to rounding level rather than sqrt(eps) / h.
double face_energy(const ConformalMetric& m, const SectorVectorField& V, bool nabla) {
    const int n = m.grid().size();
    const double c = 1.0 / m.grid().spacing();
    const double two_pi = 2.0 * std::numbers::pi;
    const Eigen::VectorXcd& p = V.profile;
    double acc = 0.0;
    for (int f = 1; f < n; ++f) {
        const Face fc = face(m, V.sector, f);
        const double plus = c + fc.b, minus = c - fc.b;
        const cd r = nabla ? plus * p[f] - minus * p[f - 1] : minus * p[f] - plus * p[f - 1];
        acc += fc.weight * std::norm(r);
    }
    const int k = V.sector;
    if (nabla) {
        if (k >= 0) acc += two_pi * (k + 1) * std::norm(p[0]);
        if (k <= 0) acc += two_pi * (1 - k) * std::norm(p[n - 1]);
    } else {
        if (k <= -2) acc += two_pi * std::abs(k + 1) * std::norm(p[0]);
        if (k >= 2) acc += two_pi * (k - 1) * std::norm(p[n - 1]);
    }
    return acc;
}

}  // namespace

double dbar_energy(const ConformalMetric& m, const SectorVectorField& V) {
    check_field(m, V, "dbar_energy");
    return face_energy(m, V, false);
}

double nabla_energy(const ConformalMetric& m, const SectorVectorField& V) {
    check_field(m, V, "nabla_energy");
    return face_energy(m, V, true);
}

double mass_norm(const ConformalMetric& m, const SectorVectorField& V) {
    check_field(m, V, "mass_norm");
    return m.omega().dot(V.profile.cwiseAbs2());
}

std::complex<double> inner(const ConformalMetric& m, const SectorVectorField& V, const SectorVectorField& W) {
    check_field(m, V, "inner");
    check_field(m, W, "inner");
    if (V.sector != W.sector) return 0.0;
    cd acc = 0.0;
    for (int i = 0; i < m.grid().size(); ++i) acc += m.omega()[i] * V.profile[i] * std::conj(W.profile[i]);
    return acc;
}

double curvature_pairing(const ConformalMetric& m, const SectorVectorField& V) {
    check_field(m, V, "curvature_pairing");
    const ScalarField r = gauss_curvature(m);
    return m.omega().dot(r.values.cwiseProduct(V.profile.cwiseAbs2()));
}

Eigen::VectorXd sector_spectrum(const ConformalMetric& m, int sector) {
    const SectorForms f = sector_forms(m, sector);
    const Eigen::ArrayXd s = f.mass.array().rsqrt();
    const Eigen::VectorXd diag = (f.dbar_diag.array() * s * s).matrix();
    Eigen::VectorXd off(f.dbar_off.size());
    for (Eigen::Index i = 0; i < off.size(); ++i) off[i] = f.dbar_off[i] * s[i] * s[i + 1];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        fail(ErrorKind::numerical, "eigen-solver failed in sector " + std::to_string(sector));
    }
    return solver.eigenvalues();
}

SpectralReport lambda_min(const ConformalMetric& m, int sector_cap) {
    if (sector_cap < 3) fail(ErrorKind::input, "lambda_min: sector cap must be at least 3");
    SpectralReport rep;
    rep.sector_cap = sector_cap;
    rep.lambda_min = std::numeric_limits<double>::infinity();
    for (int k = -sector_cap; k <= sector_cap; ++k) {
        const Eigen::VectorXd ev = sector_spectrum(m, k);
        const int dim = kernel_count(ev);
        if (dim >= ev.size()) fail(ErrorKind::numerical, "sector " + std::to_string(k) + " has no positive eigenvalue");
        rep.kernel_dim[k] = dim;
        rep.total_kernel_dim += dim;
        rep.sector_lambda[k] = ev[dim];
        if (ev[dim] < rep.lambda_min) {
            rep.lambda_min = ev[dim];
            rep.lambda_sector = k;
        }
    }
    const auto& sl = rep.sector_lambda;
    rep.tail_increasing = sl.at(sector_cap) > sl.at(sector_cap - 1) && sl.at(-sector_cap) > sl.at(-sector_cap + 1);
    rep.cap_warning = !rep.tail_increasing || std::abs(rep.lambda_sector) == sector_cap;
    return rep;
}

HolomorphicKernel holomorphic_kernel(const ConformalMetric& m, int sector_cap) {
    HolomorphicKernel out;
    out.report = lambda_min(m, sector_cap);
    if (out.report.total_kernel_dim != 3) {
        fail(ErrorKind::degeneracy, "holomorphic kernel has dimension " + std::to_string(out.report.total_kernel_dim) +
                                        " instead of 3");
    }
    for (int k = -1; k <= 1; ++k) {
        if (out.report.kernel_dim.at(k) != 1) {
            fail(ErrorKind::degeneracy, "holomorphic kernel is not spread one per sector -1, 0, 1");
        }
        SectorVectorField e{m.grid_ptr(), k, kernel_vector(m, k)};
        const double mass = mass_norm(m, e);
        e.profile /= std::sqrt(mass);
        const double energy = dbar_energy(m, e);
        if (!(energy < kKernelRatio * out.report.sector_lambda.at(k))) {
            fail(ErrorKind::numerical, "kernel vector of sector " + std::to_string(k) + " has energy " +
                                           std::to_string(energy));
        }
        out.basis.push_back(std::move(e));
    }
    return out;
}

SectorVectorField rotation_generator(const ConformalMetric& m) {
    SectorVectorField e{m.grid_ptr(), 0, kernel_vector(m, 0)};
    Eigen::VectorXd q(m.grid().size());
    for (int i = 0; i < q.size(); ++i) q[i] = std::exp(m.u()[i]) * std::sin(m.grid().node(i));
    double num = 0.0, den = 0.0;
    for (int i = 0; i < q.size(); ++i) {
        num += m.omega()[i] * q[i] * e.profile[i].real();
        den += m.omega()[i] * std::norm(e.profile[i]);
    }
    e.profile *= num / den;
    return e;
}

SectorVectorField project_holo(const ConformalMetric& m, const SectorVectorField& V, const HolomorphicKernel& kernel) {
    check_field(m, V, "project_holo");
    SectorVectorField out{V.grid, V.sector, Eigen::VectorXcd::Zero(V.profile.size())};
    for (const SectorVectorField& e : kernel.basis) {
        if (e.sector != V.sector) continue;
        out.profile += inner(m, V, e) * e.profile;
    }
    return out;
}

SectorVectorField project_holo(const ConformalMetric& m, const SectorVectorField& V) {
    return project_holo(m, V, holomorphic_kernel(m));
}

std::complex<double> futaki_via_potential(const ConformalMetric& m, const SectorVectorField& W) {
    check_field(m, W, "futaki_via_potential");
    if (W.sector != 0) return 0.0;
    const LatitudeGrid& g = m.grid();
    const int n = g.size();
    // theta' = sqrt 2 e^u p, integrated node to node by the trapezoid rule.
    Eigen::VectorXcd theta(n);
    theta[0] = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
        const cd a = std::exp(m.u()[i]) * W.profile[i];
        const cd b = std::exp(m.u()[i + 1]) * W.profile[i + 1];
        theta[i + 1] = theta[i] + g.spacing() * std::numbers::sqrt2 * 0.5 * (a + b);
    }
    const Eigen::VectorXd dev = curvature_deviation(m);
    cd acc = 0.0;
    for (int i = 0; i < n; ++i) acc -= m.omega()[i] * theta[i] * dev[i];
    return acc;
}

ProjectionIdentity projection_futaki_identity(const ConformalMetric& m) {
    const RicciPotential rp = ricci_potential(m);
    const SectorVectorField v = gradient_field(m, rp.h.values);
    const SectorVectorField pv = project_holo(m, v);
    ProjectionIdentity out;
    out.lhs = mass_norm(m, pv);
    out.rhs = std::real(futaki_via_potential(m, pv));
    out.gap = std::abs(out.lhs - out.rhs);
    return out;
}

double bochner_kodaira_residual(const ConformalMetric& m, const SectorVectorField& V) {
    const double mass = mass_norm(m, V);
    const double grad = nabla_energy(m, V);
    const double denom = mass + grad;
    if (denom == 0.0) return 0.0;
    return std::abs(grad - dbar_energy(m, V) - curvature_pairing(m, V)) / denom;
}

std::vector<KeyInequalityRow> key_inequality_check(const Trajectory& traj) {
    if (traj.triples.empty()) fail(ErrorKind::input, "key_inequality_check: no interior snapshots");
    const std::vector<IdentityResidual> ydot = y_dot_residual(traj);
    std::vector<KeyInequalityRow> rows;
    for (std::size_t j = 0; j < traj.triples.size(); ++j) {
        const StateTriple& tr = traj.triples[j];
        const auto rec = std::find_if(traj.records.begin(), traj.records.end(), [&](const DiagnosticsRecord& r) {
            return r.step_index == tr.center.step_index;
        });
        if (rec == traj.records.end()) fail(ErrorKind::input, "key_inequality_check: snapshot without diagnostics");

        const ConformalMetric& m = tr.center.metric;
        const Eigen::VectorXd& h = tr.center.h.values;
        const double y_before = y_rs(tr.before.metric, tr.before.h.values, 1, 0);
        const double y_after = y_rs(tr.after.metric, tr.after.h.values, 1, 0);
        const double y = y_rs(m, h, 1, 0);
        const double lambda = rec->lambda_min;

        const Eigen::VectorXd dev = curvature_deviation(m);
        const DerivativeStack grad = derivative_stack(m, h, 1, 0);
        const Eigen::VectorXd grad2 = grad.values.cwiseAbs2();
        const double weighted = m.omega().dot(grad2.cwiseProduct(dev.cwiseAbs()));
        const double sup_term = y * dev.cwiseAbs().maxCoeff();

        // Slack: the measured defects of the two discrete identities the chain
        // relies on, plus the projection gap.
        const double hessian_stack = l2_norm(m, derivative_stack(m, h, 2, 0));
        const double hessian_form = dbar_energy(m, gradient_field(m, h));
        const ProjectionIdentity pg = projection_futaki_identity(m);

        KeyInequalityRow row;
        row.t = tr.center.t;
        row.lhs = (y_after - y_before) / (2.0 * tr.dt());
        row.rhs = -2.0 * lambda * y + 2.0 * lambda * rec->futaki + weighted + sup_term;
        row.slack = ydot[j].total + 2.0 * std::abs(hessian_stack - hessian_form) + 2.0 * lambda * pg.gap;
        row.satisfied = row.lhs <= row.rhs + row.slack;
        row.Y = y;
        row.lambda = lambda;
        row.rate = (y > 0.0) ? row.lhs / y : 0.0;
        row.in_tail = y >= 1e-10 && y <= 1e-4;
        row.rate_in_band = !row.in_tail || std::abs(row.rate + 2.0 * lambda) <= 0.1 * 2.0 * lambda;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace kfl
