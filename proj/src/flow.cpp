#include "kfl/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "kfl/functionals.hpp"
#include "kfl/geometry.hpp"

namespace kfl {

const char* to_string(RunStatus status) {
    switch (status) {
        case RunStatus::completed: return "completed";
        case RunStatus::converged: return "converged";
        case RunStatus::blew_up: return "blew_up";
    }
    return "unknown";
}

FlowState make_state(ConformalMetric metric, double t, long step_index) {
    RicciPotential rp = ricci_potential(metric);
    return FlowState{t, std::move(metric), std::move(rp.h), rp.mu, step_index};
}

Trajectory truncated(const Trajectory& traj, double t_cut) {
    Trajectory out = traj;
    auto keep = [t_cut](double t) { return t <= t_cut + 1e-12; };
    std::erase_if(out.records, [&](const DiagnosticsRecord& r) { return !keep(r.t); });
    std::erase_if(out.triples, [&](const StateTriple& tr) { return !keep(tr.center.t); });
    std::erase_if(out.snapshots, [&](const FlowState& s) { return !keep(s.t); });
    return out;
}

namespace {

constexpr double kRk4RealStability = 2.78;

// Per-node Gershgorin row sums of the round diffusion operator; dividing by
// e^{2u} gives the spectral-radius bound for the metric.
Eigen::VectorXd gershgorin_rows(const LatitudeGrid& grid) {
    const int n = grid.size();
    const double coef = 2.0 * std::numbers::pi * grid.flux_factor() / grid.spacing();
    Eigen::VectorXd rows(n);
    for (int i = 0; i < n; ++i) rows[i] = coef * (grid.face_sin(i) + grid.face_sin(i + 1)) / grid.weights()[i];
    return rows;
}

struct Velocity {
    Eigen::VectorXd v;  // (mu - R) / 2
    Eigen::VectorXd factor;
    double area = 0.0;
};

// No validation so RK stages stay cheap.
Velocity velocity(const LatitudeGrid& grid, const Eigen::VectorXd& u) {
    Velocity out;
    out.factor = (2.0 * u.array()).exp().matrix();
    const Eigen::VectorXd lap = ops::round_laplacian(grid, u);
    const Eigen::VectorXd r = (1.0 - lap.array()) / out.factor.array();
    const Eigen::VectorXd omega = grid.weights().cwiseProduct(out.factor);
    out.area = omega.sum();
    const double mu = omega.dot(r) / out.area;
    out.v = 0.5 * (mu - r.array()).matrix();
    return out;
}

bool degenerate(const Eigen::VectorXd& u) {
    return !u.allFinite() || !(std::exp(2.0 * u.minCoeff()) >= kMinConformalFactor) ||
           !std::isfinite(std::exp(2.0 * u.maxCoeff()));
}

// Raw RK4 stepper. `k1` is the velocity at `u`; the velocity at the result is
// returned alongside so the caller can reuse it as the next k1 and read sup|R - mu|.
class Stepper {
public:
    explicit Stepper(GridPtr grid) : grid_(std::move(grid)), rows_(gershgorin_rows(*grid_)) {}

    double limit(const Eigen::VectorXd& factor) const {
        return kRk4RealStability / rows_.cwiseQuotient(factor).maxCoeff();
    }

    // Returns false on a degenerate stage; `u` and `k1` are then untouched.
    bool advance(Eigen::VectorXd& u, Velocity& k1, double dt, std::string& why) const {
        if (dt > limit(k1.factor)) {
            fail(ErrorKind::step_size, "flow_step: dt = " + std::to_string(dt) + " exceeds the stability limit " +
                                           std::to_string(limit(k1.factor)));
        }
        const LatitudeGrid& grid = *grid_;
        const Eigen::VectorXd u2 = u + 0.5 * dt * k1.v;
        if (degenerate(u2)) return why = "degenerate RK stage", false;
        const Eigen::VectorXd k2 = velocity(grid, u2).v;
        const Eigen::VectorXd u3 = u + 0.5 * dt * k2;
        if (degenerate(u3)) return why = "degenerate RK stage", false;
        const Eigen::VectorXd k3 = velocity(grid, u3).v;
        const Eigen::VectorXd u4 = u + dt * k3;
        if (degenerate(u4)) return why = "degenerate RK stage", false;
        const Eigen::VectorXd k4 = velocity(grid, u4).v;
        Eigen::VectorXd next = u + (dt / 6.0) * (k1.v + 2.0 * k2 + 2.0 * k3 + k4);
        if (degenerate(next)) return why = "metric degenerated", false;
        Velocity k_next = velocity(grid, next);
        if (!k_next.v.allFinite()) return why = "curvature is not finite", false;
        const double drift = std::abs(k_next.area - k1.area);
        if (drift > 1e-9 * std::max(1.0, k1.area)) {
            fail(ErrorKind::numerical, "flow_step: area drift " + std::to_string(drift) + " in one step");
        }
        u = std::move(next);
        k1 = std::move(k_next);
        return true;
    }

    const GridPtr& grid() const { return grid_; }

private:
    GridPtr grid_;
    Eigen::VectorXd rows_;
};

FlowState materialize(const GridPtr& grid, const Eigen::VectorXd& u, double t, long step) {
    return make_state(ConformalMetric::from_samples(grid, u), t, step);
}

}  // namespace

double stability_limit(const ConformalMetric& m) {
    return kRk4RealStability / gershgorin_rows(m.grid()).cwiseQuotient(m.factor()).maxCoeff();
}

double cfl_step(const ConformalMetric& m, double cfl) {
    const double h = m.grid().spacing();
    return cfl * h * h * m.factor().minCoeff();
}

double sup_gdot(const FlowState& s) {
    const ScalarField r = gauss_curvature(s.metric);
    return (r.values.array() - s.mu).abs().maxCoeff();
}

FlowState flow_step(const FlowState& s, double dt) {
    if (!(dt > 0.0)) fail(ErrorKind::step_size, "flow_step: dt must be positive");
    const Stepper stepper(s.metric.grid_ptr());
    Eigen::VectorXd u = s.metric.u();
    Velocity k1 = velocity(s.metric.grid(), u);
    std::string why;
    if (!stepper.advance(u, k1, dt, why)) throw BlowUpError("flow_step: " + why, s);
    try {
        return make_state(ConformalMetric::from_samples(s.metric.grid_ptr(), std::move(u)), s.t + dt,
                          s.step_index + 1);
    } catch (const Error& e) {
        throw BlowUpError(std::string("flow_step: ") + e.what(), s);
    }
}

void validate(const FlowConfig& c) {
    auto bad = [](const std::string& what) { fail(ErrorKind::config, what); };
    if (c.n < 8) bad("grid size must be at least 8");
    if (!(std::abs(c.initial.amplitude) < 0.5)) bad("perturbation amplitude must be below 0.5 in magnitude");
    for (double a : c.initial.coefficients) {
        if (!std::isfinite(a)) bad("perturbation coefficients must be finite");
    }
    if (!(c.t_end >= 0.0) || !std::isfinite(c.t_end)) bad("t_end must be finite and non-negative");
    if (!(c.cadence > 0.0) || !std::isfinite(c.cadence)) bad("cadence must be positive");
    if (!(c.cfl > 0.0)) bad("cfl constant must be positive");
    if (c.dt && !(*c.dt > 0.0)) bad("dt override must be positive");
    if (c.sector_cap < 3) bad("sector cap must be at least 3");
    if (!(c.convergence_threshold > 0.0)) bad("convergence threshold must be positive");
}

Trajectory run_flow(const FlowConfig& config) {
    validate(config);
    Trajectory traj;
    traj.config = config;

    const GridPtr grid = make_grid(config.n);
    FlowState state = make_state(ConformalMetric::from_polynomial(grid, config.initial.amplitude,
                                                                  config.initial.coefficients));

    long steps_per_record = 0;
    if (config.dt) {
        steps_per_record = std::lround(config.cadence / *config.dt);
        if (steps_per_record < 1 ||
            std::abs(steps_per_record * *config.dt - config.cadence) > 1e-9 * config.cadence) {
            fail(ErrorKind::config, "dt override must divide the record cadence");
        }
    } else {
        const double target = std::min(cfl_step(state.metric, config.cfl), 0.9 * stability_limit(state.metric));
        steps_per_record = static_cast<long>(std::ceil(config.cadence / target - 1e-12));
    }
    const double dt = config.cadence / static_cast<double>(steps_per_record);
    traj.dt = dt;

    const long record_count = static_cast<long>(std::floor(config.t_end / config.cadence + 1e-9));
    const long final_step = record_count * steps_per_record;
    std::vector<long> snapshot_steps;
    for (double ts : config.snapshot_times) {
        const long st = std::lround(ts / dt);
        if (st >= 0 && st <= final_step) snapshot_steps.push_back(st);
    }

    const Eigen::VectorXd u0 = state.metric.u();
    const Stepper stepper(grid);
    double gdot_integral = 0.0;
    double sup_prev = sup_gdot(state);

    auto record = [&](const FlowState& s, double sup_now) {
        DiagnosticsRecord rec = diagnose(s, config.sector_cap);
        rec.sup_gdot = sup_now;
        rec.gdot_integral = gdot_integral;
        const Eigen::ArrayXd ratio = (2.0 * (s.metric.u() - u0).array()).exp();
        rec.ratio_min = ratio.minCoeff();
        rec.ratio_max = ratio.maxCoeff();
        traj.records.push_back(std::move(rec));
    };
    auto wants_snapshot = [&](long step) {
        return std::find(snapshot_steps.begin(), snapshot_steps.end(), step) != snapshot_steps.end();
    };

    traj.initial = state;
    record(state, sup_prev);
    if (wants_snapshot(0)) traj.snapshots.push_back(state);
    bool done = record_count == 0;
    if (sup_prev < config.convergence_threshold) {
        traj.status = RunStatus::converged;
        if (config.stop_on_convergence) done = true;
    }

    // Steps run on raw samples; full states (with their Ricci potentials) are
    // only built around records and at snapshots.
    Eigen::VectorXd u = state.metric.u();
    Velocity k1 = velocity(*grid, u);
    long step = 0;
    FlowState last_full = state;
    std::optional<StateTriple> pending;
    try {
        while (!(done && !pending)) {
            const Eigen::VectorXd u_prev = u;
            std::string why;
            if (!stepper.advance(u, k1, dt, why)) throw BlowUpError("flow: " + why, last_full);
            ++step;
            const double t = static_cast<double>(step) * dt;
            const double sup_next = 2.0 * k1.v.cwiseAbs().maxCoeff();
            gdot_integral += 0.5 * dt * (sup_prev + sup_next);
            sup_prev = sup_next;
            if (pending) {
                pending->after = materialize(grid, u, t, step);
                traj.triples.push_back(std::move(*pending));
                pending.reset();
            }
            if (done) break;  // the extra step only completes the last triple
            const bool at_record = step % steps_per_record == 0;
            if (at_record || wants_snapshot(step)) {
                state = materialize(grid, u, t, step);
                last_full = state;
                if (wants_snapshot(step)) traj.snapshots.push_back(state);
            }
            if (at_record) {
                record(state, sup_prev);
                pending = StateTriple{materialize(grid, u_prev, t - dt, step - 1), state, state};
                const bool converged = sup_prev < config.convergence_threshold;
                traj.status = converged ? RunStatus::converged : RunStatus::completed;
                if (step >= final_step || (converged && config.stop_on_convergence)) done = true;
            }
        }
    } catch (const Error& e) {
        // A metric that loses regularity or positivity between records is a
        // blow-up as well; anything else propagates.
        const bool blow_up = e.kind() == ErrorKind::blow_up || e.kind() == ErrorKind::degenerate_metric ||
                             e.kind() == ErrorKind::input;
        if (!blow_up) throw;
        traj.status = RunStatus::blew_up;
        traj.message = e.what();
        traj.last = last_full;
        pending.reset();
    }
    if (traj.status != RunStatus::blew_up) traj.last = state;

    const std::vector<double> nu = mabuchi_path(traj);
    for (std::size_t k = 0; k < traj.records.size(); ++k) traj.records[k].nu = nu[k];
    return traj;
}

std::vector<IdentityResidual> h_flow_residual(const Trajectory& traj) {
    if (traj.triples.empty()) fail(ErrorKind::input, "h_flow_residual: need at least three consecutive snapshots");
    std::vector<IdentityResidual> out;
    out.reserve(traj.triples.size());
    for (const StateTriple& tr : traj.triples) {
        const ConformalMetric& m = tr.center.metric;
        const LatitudeGrid& grid = m.grid();
        const Eigen::VectorXd& h = tr.center.h.values;
        const double mu = tr.center.mu;
        const double dt = tr.dt();
        const Eigen::VectorXd hdot = (tr.after.h.values - tr.before.h.values) / (2.0 * dt);

        // Conservative operator used by the scheme.
        const Eigen::VectorXd lap_scheme = 0.5 * ops::round_laplacian(grid, h).array() / m.factor().array();
        // Independent non-conservative stencil e^{-2u} (h'' + cot(xi) h') / 2.
        const Eigen::VectorXd d1 = ops::central_difference(grid, h, 1.0);
        const Eigen::VectorXd d2 = ops::second_difference(grid, h);
        Eigen::VectorXd lap_ind(h.size());
        for (int i = 0; i < h.size(); ++i) {
            lap_ind[i] = 0.5 * (d2[i] + d1[i] / std::tan(grid.node(i))) / m.factor()[i];
        }

        auto sup_after_gauge = [&](const Eigen::VectorXd& defect) {
            const double c = m.integrate(defect) / m.area();
            return (defect.array() - c).abs().maxCoeff();
        };
        IdentityResidual r;
        r.t = tr.center.t;
        r.total = sup_after_gauge(hdot - lap_ind - mu * h);
        r.time_part = sup_after_gauge(hdot - lap_scheme - mu * h);
        r.grid_part = sup_after_gauge(lap_scheme - lap_ind);
        r.alternate = sup_after_gauge(hdot - lap_ind + mu * h);
        out.push_back(r);
    }
    return out;
}

EquivalenceReport metric_equivalence_report(const Trajectory& traj, double tolerance) {
    if (traj.records.empty()) fail(ErrorKind::input, "metric_equivalence_report: empty trajectory");
    EquivalenceReport rep;
    rep.integral = traj.records.back().gdot_integral;
    rep.ratio_min = 1.0;
    rep.ratio_max = 1.0;
    for (const DiagnosticsRecord& r : traj.records) {
        rep.ratio_min = std::min(rep.ratio_min, r.ratio_min);
        rep.ratio_max = std::max(rep.ratio_max, r.ratio_max);
    }
    rep.envelope = std::exp(rep.integral);
    rep.holds = rep.ratio_max <= rep.envelope * (1.0 + tolerance) &&
                rep.ratio_min >= 1.0 / (rep.envelope * (1.0 + tolerance));
    return rep;
}

double max_total(const std::vector<IdentityResidual>& series) {
    double m = 0.0;
    for (const auto& r : series) m = std::max(m, r.total);
    return m;
}

}  // namespace kfl
