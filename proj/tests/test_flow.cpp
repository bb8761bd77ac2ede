#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "kfl/error.hpp"
#include "kfl/flow.hpp"
#include "kfl/geometry.hpp"
#include "support.hpp"

using namespace kfl;

namespace {

FlowConfig perturbed_config(int n, double t_end, double amplitude = 0.05) {
    FlowConfig c;
    c.n = n;
    c.initial = {amplitude, testing_support::reference_coefficients()};
    c.t_end = t_end;
    c.cadence = 0.1;
    return c;
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorKind::input;
}

Eigen::VectorXd advance(const FlowState& s, double total, int steps) {
    FlowState x = s;
    for (int i = 0; i < steps; ++i) x = flow_step(x, total / steps);
    return x.metric.u();
}

double max_of(const std::vector<IdentityResidual>& v, double IdentityResidual::*field) {
    double m = 0.0;
    for (const auto& r : v) m = std::max(m, r.*field);
    return m;
}

}  // namespace

TEST(FlowStep, RoundMetricIsStationaryForAdmissibleSteps) {
    const FlowState s = make_state(ConformalMetric::round(make_grid(64)));
    const double limit = stability_limit(s.metric);
    for (double frac : {1e-3, 0.1, 0.5, 1.0}) {
        const FlowState next = flow_step(s, frac * limit);
        EXPECT_LT(next.metric.u().cwiseAbs().maxCoeff(), 1e-12) << frac;
        EXPECT_EQ(next.step_index, 1);
    }
}

TEST(FlowStep, RejectsInadmissibleSteps) {
    const FlowState s = make_state(testing_support::perturbed(64));
    EXPECT_EQ(kind_of([&] { flow_step(s, 0.0); }), ErrorKind::step_size);
    EXPECT_EQ(kind_of([&] { flow_step(s, -1e-4); }), ErrorKind::step_size);
    EXPECT_EQ(kind_of([&] { flow_step(s, 1.01 * stability_limit(s.metric)); }), ErrorKind::step_size);
}

TEST(FlowStep, ReSolvesPotentialAndConservesArea) {
    FlowState s = make_state(testing_support::perturbed(64, 0.2));
    const double dt = cfl_step(s.metric, 0.2);
    for (int i = 0; i < 50; ++i) {
        const FlowState next = flow_step(s, dt);
        EXPECT_LT(std::abs(next.metric.area() - s.metric.area()), 1e-9);
        const RicciPotential rp = ricci_potential(next.metric);
        EXPECT_LT((rp.h.values - next.h.values).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_EQ(rp.mu, next.mu);
        s = next;
    }
    EXPECT_LT(std::abs(s.metric.area() - 4.0 * std::numbers::pi), 1e-6 * s.t);
}

TEST(FlowStep, RichardsonRatioShowsFourthOrder) {
    // Over a fixed interval, successive substep halvings change the result by
    // ratios near 2^4.
    const FlowState s = make_state(testing_support::perturbed(64));
    const double t = 0.9 * stability_limit(s.metric);
    const Eigen::VectorXd a = advance(s, t, 1), b = advance(s, t, 2), c = advance(s, t, 4);
    const double ratio = (a - b).cwiseAbs().maxCoeff() / (b - c).cwiseAbs().maxCoeff();
    EXPECT_NEAR(ratio, 16.0, 0.2 * 16.0);
}

TEST(FlowStep, GlobalErrorAgainstRefinedReferenceScalesAsDtToTheFourth) {
    const FlowState s = make_state(testing_support::perturbed(64, 0.1));
    const double t = 8.0 * 0.9 * stability_limit(s.metric);
    const Eigen::VectorXd ref = advance(s, t, 128);
    const double e1 = (advance(s, t, 8) - ref).cwiseAbs().maxCoeff();
    const double e2 = (advance(s, t, 16) - ref).cwiseAbs().maxCoeff();
    EXPECT_NEAR(e1 / e2, 16.0, 0.3 * 16.0);
}

TEST(FlowStep, AdditiveGaugeOfTheInitialFactorIsImmaterial) {
    auto g = make_grid(64);
    const Eigen::VectorXd u = testing_support::random_smooth(*g, 4, 4, 0.1);
    FlowState a = make_state(ConformalMetric::normalized(g, u));
    FlowState b = make_state(ConformalMetric::normalized(g, (u.array() + 0.37).matrix()));
    const double dt = cfl_step(a.metric, 0.2);
    for (int i = 0; i < 20; ++i) {
        a = flow_step(a, dt);
        b = flow_step(b, dt);
    }
    EXPECT_LT((gauss_curvature(a.metric).values - gauss_curvature(b.metric).values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RunFlow, RecordsEveryCadenceIncludingTheStart) {
    const Trajectory traj = run_flow(perturbed_config(64, 1.0));
    ASSERT_EQ(traj.records.size(), 11u);
    for (std::size_t k = 0; k < traj.records.size(); ++k) {
        EXPECT_NEAR(traj.records[k].t, 0.1 * k, 1e-12);
        if (k > 0) EXPECT_GT(traj.records[k].t, traj.records[k - 1].t);
    }
    EXPECT_EQ(traj.triples.size(), 10u);
    for (const StateTriple& tr : traj.triples) {
        EXPECT_EQ(tr.center.step_index - tr.before.step_index, 1);
        EXPECT_EQ(tr.after.step_index - tr.center.step_index, 1);
    }
    EXPECT_EQ(traj.status, RunStatus::completed);
}

TEST(RunFlow, RoundMetricConvergesImmediatelyWithConstantDiagnostics) {
    FlowConfig c;
    c.n = 64;
    c.t_end = 5.0;
    const Trajectory stopped = run_flow(c);
    EXPECT_TRUE(stopped.converged());
    EXPECT_EQ(stopped.records.size(), 1u);

    c.t_end = 1.0;
    c.stop_on_convergence = false;
    const Trajectory full = run_flow(c);
    ASSERT_EQ(full.records.size(), 11u);
    for (const DiagnosticsRecord& r : full.records) {
        EXPECT_LT(r.sup_gdot, 1e-12);
        EXPECT_LT(r.Y, 1e-28);
        EXPECT_EQ(r.kernel_dim, 3);
        EXPECT_NEAR(r.lambda_min, full.records.front().lambda_min, 1e-12);
    }
}

TEST(RunFlow, YDecreasesAfterTheTransient) {
    const Trajectory traj = run_flow(perturbed_config(64, 2.0));
    for (std::size_t k = 2; k < traj.records.size(); ++k) EXPECT_LT(traj.records[k].Y, traj.records[k - 1].Y) << k;
}

TEST(RunFlow, AreaStaysOnTheSphere) {
    const Trajectory traj = run_flow(perturbed_config(64, 2.0, 0.2));
    for (const DiagnosticsRecord& r : traj.records) {
        EXPECT_LT(std::abs(r.area - 4.0 * std::numbers::pi), 1e-6 * std::max(r.t, 1e-3));
    }
}

TEST(RunFlow, SnapshotsLandOnRequestedTimes) {
    FlowConfig c = perturbed_config(64, 0.5);
    c.snapshot_times = {0.0, 0.25, 0.5, 7.0};
    const Trajectory traj = run_flow(c);
    ASSERT_EQ(traj.snapshots.size(), 3u);
    EXPECT_NEAR(traj.snapshots[1].t, 0.25, traj.dt);
}

TEST(RunFlow, ValidatesConfiguration) {
    auto bad = [](auto mutate) {
        FlowConfig c = perturbed_config(64, 1.0);
        mutate(c);
        return kind_of([&] { run_flow(c); });
    };
    EXPECT_EQ(bad([](FlowConfig& c) { c.n = 4; }), ErrorKind::config);
    EXPECT_EQ(bad([](FlowConfig& c) { c.initial.amplitude = 0.5; }), ErrorKind::config);
    EXPECT_EQ(bad([](FlowConfig& c) { c.cadence = 0.0; }), ErrorKind::config);
    EXPECT_EQ(bad([](FlowConfig& c) { c.t_end = -1.0; }), ErrorKind::config);
    EXPECT_EQ(bad([](FlowConfig& c) { c.sector_cap = 2; }), ErrorKind::config);
    EXPECT_EQ(bad([](FlowConfig& c) { c.dt = 0.03; }), ErrorKind::config);  // does not divide the cadence
}

TEST(RunFlow, DtOverrideAboveStabilityLimitIsAStepSizeError) {
    FlowConfig c = perturbed_config(64, 0.2);
    c.dt = 0.1;
    EXPECT_EQ(kind_of([&] { run_flow(c); }), ErrorKind::step_size);
}

TEST(HFlowResidual, NeedsInteriorSnapshots) {
    const Trajectory traj = run_flow(perturbed_config(64, 0.0));
    EXPECT_EQ(kind_of([&] { h_flow_residual(traj); }), ErrorKind::input);
}

TEST(HFlowResidual, RoundMetricHasNoResidual) {
    FlowConfig c;
    c.n = 64;
    c.t_end = 0.3;
    c.stop_on_convergence = false;
    EXPECT_LT(max_total(h_flow_residual(run_flow(c))), 1e-10);
}

TEST(HFlowResidual, TimePartShrinksFourfoldWhenDtHalves) {
    FlowConfig c = perturbed_config(64, 0.3);
    const Trajectory coarse = run_flow(c);
    c.dt = coarse.dt / 2.0;
    const Trajectory fine = run_flow(c);
    const double r = max_of(h_flow_residual(coarse), &IdentityResidual::time_part) /
                     max_of(h_flow_residual(fine), &IdentityResidual::time_part);
    EXPECT_NEAR(r, 4.0, 0.6);
}

TEST(HFlowResidual, TotalShrinksFourfoldWhenGridDoubles) {
    const double a = max_total(h_flow_residual(run_flow(perturbed_config(64, 0.3))));
    const double b = max_total(h_flow_residual(run_flow(perturbed_config(128, 0.3))));
    EXPECT_NEAR(a / b, 4.0, 0.6);
}

TEST(HFlowResidual, OppositeSignOfTheMuTermIsRejected) {
    const auto res = h_flow_residual(run_flow(perturbed_config(64, 0.3)));
    EXPECT_GT(max_of(res, &IdentityResidual::alternate), 10.0 * max_total(res));
}

TEST(MetricEquivalence, RoundMetricHasUnitRatios) {
    FlowConfig c;
    c.n = 64;
    c.t_end = 0.5;
    c.stop_on_convergence = false;
    const EquivalenceReport rep = metric_equivalence_report(run_flow(c));
    EXPECT_LT(rep.integral, 1e-12);
    EXPECT_NEAR(rep.ratio_min, 1.0, 1e-12);
    EXPECT_NEAR(rep.ratio_max, 1.0, 1e-12);
    EXPECT_TRUE(rep.holds);
}

TEST(MetricEquivalence, EnvelopeHoldsAndTruncationNeverIncreasesTheIntegral) {
    const Trajectory traj = run_flow(perturbed_config(64, 2.0, 0.2));
    const EquivalenceReport full = metric_equivalence_report(traj);
    EXPECT_TRUE(full.holds);
    EXPECT_GT(full.integral, 0.0);
    EXPECT_LE(full.ratio_max, full.envelope);
    EXPECT_GE(full.ratio_min, 1.0 / full.envelope);
    const EquivalenceReport half = metric_equivalence_report(truncated(traj, 1.0));
    EXPECT_LE(half.integral, full.integral);
    EXPECT_EQ(kind_of([] { metric_equivalence_report(Trajectory{}); }), ErrorKind::input);
}
