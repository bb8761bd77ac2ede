#include "kfl/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "kfl/compat.hpp"
#include "kfl/curvop.hpp"
#include "kfl/error.hpp"
#include "kfl/functionals.hpp"
#include "kfl/geometry.hpp"
#include "kfl/spectral.hpp"

namespace kfl {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return exit_config;
        case ErrorKind::blow_up: return exit_blow_up;
        case ErrorKind::input: return exit_check_failed;
        case ErrorKind::degeneracy:
        case ErrorKind::numerical:
        case ErrorKind::degenerate_metric:
        case ErrorKind::solvability:
        case ErrorKind::step_size:
        case ErrorKind::capability: return exit_numerical;
    }
    return exit_unexpected;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

namespace {

struct LineFit {
    double slope = 0.0, intercept = 0.0, r_squared = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    f.r_squared = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

}  // namespace

RateFit rate_fit(const std::vector<std::pair<double, double>>& series, double lambda_ref, const RateFitOptions& o) {
    RateFit fit;
    fit.reference = 2.0 * lambda_ref;
    auto inside = [&](double y) { return y >= o.y_low && y <= o.y_high; };

    std::ptrdiff_t end = static_cast<std::ptrdiff_t>(series.size());
    while (end > 0 && !inside(series[end - 1].second)) --end;
    std::ptrdiff_t begin = end;
    while (begin > 0 && inside(series[begin - 1].second)) --begin;
    fit.points = static_cast<int>(end - begin);
    if (fit.points == 0) {
        fit.reason = "no points with Y inside the fit window";
        return fit;
    }
    fit.t1 = series[begin].first;
    fit.t2 = series[end - 1].first;
    if (fit.points < o.min_points) {
        fit.reason = "fewer than " + std::to_string(o.min_points) + " points inside the fit window";
        return fit;
    }

    std::vector<double> t, ly;
    for (std::ptrdiff_t i = begin; i < end; ++i) {
        t.push_back(series[i].first);
        ly.push_back(std::log(series[i].second));
    }
    const LineFit all = least_squares(t, ly);
    fit.applicable = true;
    fit.slope = all.slope;
    fit.intercept = all.intercept;
    fit.r_squared = all.r_squared;
    fit.gap = fit.reference > 0.0 ? std::abs(fit.slope + fit.reference) / fit.reference : 0.0;

    const std::size_t half = t.size() / 2;
    fit.slope_first_half = least_squares({t.begin(), t.begin() + half}, {ly.begin(), ly.begin() + half}).slope;
    fit.slope_second_half = least_squares({t.begin() + half, t.end()}, {ly.begin() + half, ly.end()}).slope;
    return fit;
}

json to_json(const RateFit& f) {
    json j;
    j["applicable"] = f.applicable;
    j["reason"] = f.reason;
    j["window"] = {f.t1, f.t2};
    j["points"] = f.points;
    j["slope"] = f.slope;
    j["intercept"] = f.intercept;
    j["r_squared"] = f.r_squared;
    j["reference_2lambda"] = f.reference;
    j["relative_gap"] = f.gap;
    j["slope_first_half"] = f.slope_first_half;
    j["slope_second_half"] = f.slope_second_half;
    return j;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << kTrajectoryCsvHeader << "\n";
    auto yrs = [](const DiagnosticsRecord& r, int a, int b) {
        const auto it = r.Y_rs.find({a, b});
        return it == r.Y_rs.end() ? std::nan("") : it->second;
    };
    for (const DiagnosticsRecord& r : traj.records) {
        const double row[] = {r.t,  r.Y,      yrs(r, 1, 0),  yrs(r, 1, 1), yrs(r, 2, 0),
                              r.nu, r.futaki, r.lambda_min, r.sup_gdot,   r.area};
        for (std::size_t k = 0; k < std::size(row); ++k) {
            if (k) out << ',';
            out << csv_field(format_double(row[k]));
        }
        out << "\n";
    }
}

void write_snapshot(std::ostream& out, const FlowState& s) {
    const ConformalMetric& m = s.metric;
    const Eigen::VectorXd r = gauss_curvature(m).values;
    out << "# " << kSnapshotSchema << "\n";
    out << "# n " << m.grid().size() << "\n";
    out << "# t " << format_double(s.t) << "\n";
    out << "# step " << s.step_index << "\n";
    out << "# mu " << format_double(s.mu) << "\n";
    out << "# area " << format_double(m.area()) << "\n";
    out << "# columns xi u h R\n";
    for (int i = 0; i < m.grid().size(); ++i) {
        out << format_double(m.grid().node(i)) << ' ' << format_double(m.u()[i]) << ' '
            << format_double(s.h.values[i]) << ' ' << format_double(r[i]) << "\n";
    }
}

namespace {

// A residual counts as exceeded when its largest total is above
// limit * scale + kResidualFloor; the floor keeps near-round runs, where the
// evolved quantities are at rounding level, from tripping the relative test.
constexpr double kResidualFloor = 1e-8;

ResidualSummary summarize(const std::vector<IdentityResidual>& series, double scale, double limit) {
    ResidualSummary s;
    for (const IdentityResidual& r : series) {
        s.max_total = std::max(s.max_total, r.total);
        s.max_time_part = std::max(s.max_time_part, r.time_part);
        s.max_grid_part = std::max(s.max_grid_part, r.grid_part);
        s.max_alternate = std::max(s.max_alternate, r.alternate);
    }
    s.scale = scale;
    s.relative = scale > 0.0 ? s.max_total / scale : 0.0;
    s.limit = limit;
    s.exceeded = s.max_total > limit * scale + kResidualFloor;
    return s;
}

json to_json(const ResidualSummary& s) {
    return {{"max_total", s.max_total},         {"max_time_part", s.max_time_part},
            {"max_grid_part", s.max_grid_part}, {"max_alternate", s.max_alternate},
            {"scale", s.scale},                 {"relative", s.relative},
            {"limit", s.limit},                 {"exceeded", s.exceeded}};
}

}  // namespace

RunSummary execute_run(const RunConfig& config) {
    RunSummary s;
    s.config = config;
    s.trajectory = run_flow(resolved_flow_config(config));
    const Trajectory& traj = s.trajectory;

    if (!traj.records.empty()) s.lambda_final = traj.records.back().lambda_min;
    std::vector<std::pair<double, double>> series;
    for (const DiagnosticsRecord& r : traj.records) series.emplace_back(r.t, r.Y);
    s.fit = rate_fit(series, s.lambda_final);

    if (!traj.records.empty()) s.equivalence = metric_equivalence_report(traj, config.tolerances.equivalence);

    if (!traj.triples.empty()) {
        double h_scale = 0.0, y_scale = 0.0, dh_scale = 0.0;
        for (const StateTriple& tr : traj.triples) {
            const FlowState& c = tr.center;
            h_scale = std::max(h_scale, c.h.values.cwiseAbs().maxCoeff());
            const Eigen::VectorXd dev = gauss_curvature(c.metric).values.array() - c.mu;
            dh_scale = std::max(dh_scale, c.metric.integrate(dev.cwiseAbs2()));
        }
        for (const DiagnosticsRecord& r : traj.records) y_scale = std::max(y_scale, r.Y);
        const Tolerances& tol = config.tolerances;
        s.h_flow = summarize(h_flow_residual(traj), h_scale, tol.h_residual);
        s.y_dot = summarize(y_dot_residual(traj), y_scale, tol.y_residual);
        s.delta_h = summarize(delta_h_flow_residual(traj), dh_scale, tol.delta_h_residual);
        s.residuals_available = true;
    }
    return s;
}

json summary_json(const RunSummary& s) {
    const Trajectory& traj = s.trajectory;
    json j;
    j["schema"] = kSummarySchema;
    j["csv_schema"] = kTrajectoryCsvSchema;
    j["status"] = to_string(traj.status);
    j["message"] = traj.message;
    j["converged"] = traj.converged();
    j["n"] = traj.config.n;
    j["dt"] = traj.dt;
    j["records"] = traj.records.size();
    j["final_time"] = traj.records.empty() ? 0.0 : traj.records.back().t;
    if (!traj.records.empty()) {
        const DiagnosticsRecord& last = traj.records.back();
        j["final"] = {{"Y", last.Y},         {"nu", last.nu},     {"futaki", last.futaki},
                      {"sup_gdot", last.sup_gdot}, {"area", last.area}, {"kernel_dim", last.kernel_dim}};
    }
    j["lambda_final"] = s.lambda_final;
    j["rate_fit"] = to_json(s.fit);
    if (s.residuals_available) {
        j["residuals"] = {{"h_flow", to_json(s.h_flow)}, {"y_dot", to_json(s.y_dot)}, {"delta_h", to_json(s.delta_h)}};
    } else {
        j["residuals"] = nullptr;
    }
    j["equivalence"] = {{"gdot_integral", s.equivalence.integral},
                        {"ratio_min", s.equivalence.ratio_min},
                        {"ratio_max", s.equivalence.ratio_max},
                        {"envelope", s.equivalence.envelope},
                        {"holds", s.equivalence.holds}};
    return j;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::input, "cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace

int write_run_artifacts(const RunSummary& s, const std::string& dir) {
    fs::create_directories(dir);
    {
        std::ostringstream csv;
        write_trajectory_csv(csv, s.trajectory);
        write_text(fs::path(dir) / "trajectory.csv", csv.str());
    }
    write_json(fs::path(dir) / "summary.json", summary_json(s));
    write_json(fs::path(dir) / "config.json", to_json(s.config));
    for (std::size_t k = 0; k < s.trajectory.snapshots.size(); ++k) {
        std::ostringstream snap;
        write_snapshot(snap, s.trajectory.snapshots[k]);
        write_text(fs::path(dir) / ("snapshot_" + std::to_string(k) + ".txt"), snap.str());
    }
    if (s.trajectory.status == RunStatus::blew_up) return exit_blow_up;
    if (s.residual_exceeded() || !s.equivalence.holds) return exit_check_failed;
    return exit_ok;
}

namespace {

template <class F>
CommandResult guarded(F&& body) {
    CommandResult r;
    try {
        body(r);
    } catch (const Error& e) {
        r.exit_code = exit_code_for(e.kind());
        r.error = e.what();
    } catch (const std::exception& e) {
        r.exit_code = exit_unexpected;
        r.error = e.what();
    }
    return r;
}

void maybe_write(const std::string& dir, const char* name, const json& j) {
    if (dir.empty()) return;
    fs::create_directories(dir);
    write_json(fs::path(dir) / name, j);
}

json spectrum_json(const SpectralReport& rep) {
    json sectors = json::object();
    for (const auto& [k, lam] : rep.sector_lambda) {
        sectors[std::to_string(k)] = {{"lambda", lam}, {"kernel_dim", rep.kernel_dim.at(k)}};
    }
    return {{"sector_cap", rep.sector_cap},     {"lambda_min", rep.lambda_min},
            {"lambda_sector", rep.lambda_sector}, {"kernel_dim", rep.total_kernel_dim},
            {"tail_increasing", rep.tail_increasing}, {"cap_warning", rep.cap_warning},
            {"sectors", sectors}};
}

}  // namespace

CommandResult run_command(const RunConfig& config, const std::string& out_dir) {
    return guarded([&](CommandResult& r) {
        const RunSummary s = execute_run(config);
        r.report = summary_json(s);
        r.exit_code = write_run_artifacts(s, out_dir.empty() ? config.output_dir : out_dir);
    });
}

CommandResult spectrum_command(const RunConfig& config, const std::string& out_dir) {
    return guarded([&](CommandResult& r) {
        const FlowConfig flow = resolved_flow_config(config);
        const ConformalMetric m =
            ConformalMetric::from_polynomial(make_grid(flow.n), flow.initial.amplitude, flow.initial.coefficients);
        const SpectralReport rep = lambda_min(m, flow.sector_cap);
        json j = spectrum_json(rep);
        j["schema"] = "kfl.spectrum/1";
        j["n"] = flow.n;
        const bool kernel_ok = rep.total_kernel_dim == 3;
        if (kernel_ok) {
            const ProjectionIdentity pid = projection_futaki_identity(m);
            j["projection_identity"] = {{"lhs", pid.lhs}, {"rhs", pid.rhs}, {"gap", pid.gap}};
        }
        j["pass"] = kernel_ok;
        r.report = j;
        r.exit_code = kernel_ok ? exit_ok : exit_numerical;
        if (!kernel_ok) r.error = "holomorphic kernel has dimension " + std::to_string(rep.total_kernel_dim);
        maybe_write(out_dir, "spectrum.json", j);
    });
}

CommandResult curvop_command(const std::string& text, std::optional<double> bound, const std::string& out_dir) {
    CommandResult parsed;
    std::array<curvop::cd, 16> raw{};
    try {
        raw = curvop::parse_components(text);
    } catch (const Error& e) {
        parsed.exit_code = exit_config;
        parsed.error = e.what();
        return parsed;
    }
    return guarded([&](CommandResult& r) {
        using namespace curvop;
        const CurvatureTensor2 t = CurvatureTensor2::from_components(raw);
        const ConditionC cc = condition_c(t);
        const CurvatureOperatorMatrix op = operator_matrix(t);
        json j;
        j["schema"] = "kfl.curvop/1";
        j["scalar"] = t.scalar();
        j["operator"] = json::array();
        for (int a = 0; a < 4; ++a) {
            j["operator"].push_back({op.full(a, 0), op.full(a, 1), op.full(a, 2), op.full(a, 3)});
        }
        j["condition_c"] = {{"ricci_nonneg", cc.ricci_nonneg},
                            {"two_nonneg", cc.two_nonneg},
                            {"ricci_eigenvalues", {cc.ricci_eigenvalues[0], cc.ricci_eigenvalues[1]}},
                            {"traceless_eigenvalues", {cc.m[0], cc.m[1], cc.m[2]}},
                            {"holds", cc.holds()}};
        bool pass = cc.holds();
        if (pass) {
            const double c = bound.value_or(t.scalar());
            const BoundReport rep = eigenvalue_bounds(t, c);
            json checks = json::array();
            for (const BoundCheck& b : rep.checks) {
                checks.push_back({{"name", b.name}, {"lhs", b.lhs}, {"rhs", b.rhs}, {"ok", b.ok}});
            }
            j["bound"] = c;
            j["checks"] = checks;
            pass = rep.all_ok();
        }
        j["pass"] = pass;
        r.report = j;
        r.exit_code = pass ? exit_ok : exit_check_failed;
        maybe_write(out_dir, "curvop.json", j);
    });
}

namespace {

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) fail(ErrorKind::config, std::string(what) + " must be a non-empty array of rows");
    const std::size_t n = j.size();
    Eigen::MatrixXd m(n, n);
    for (std::size_t a = 0; a < n; ++a) {
        if (!j[a].is_array() || j[a].size() != n) fail(ErrorKind::config, std::string(what) + " must be square");
        for (std::size_t b = 0; b < n; ++b) {
            if (!j[a][b].is_number()) fail(ErrorKind::config, std::string(what) + " entries must be numbers");
            m(a, b) = j[a][b].get<double>();
        }
    }
    return m;
}

}  // namespace

CommandResult compat_command(const std::string& text, const std::string& out_dir) {
    return guarded([&](CommandResult& r) {
        json in;
        try {
            in = json::parse(text);
        } catch (const json::parse_error& e) {
            fail(ErrorKind::config, std::string("compat: malformed JSON: ") + e.what());
        }
        if (!in.is_object() || !in.contains("g") || !in.contains("J")) {
            fail(ErrorKind::config, "compat: expected an object with 'g' and 'J'");
        }
        const Eigen::MatrixXd g = matrix_from_json(in.at("g"), "g");
        const Eigen::MatrixXd jm = matrix_from_json(in.at("J"), "J");
        const double tol = in.value("tolerance", 1e-12);
        const double residual = compat::hermitian_compat_residual(g, jm);
        const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
        const bool pass = residual <= tol * scale;
        json j = {{"schema", "kfl.compat/1"},
                  {"residual", residual},
                  {"tolerance", tol},
                  {"norm_sq", compat::complex_structure_norm_sq(g, jm)},
                  {"expected_norm_sq", static_cast<double>(g.rows())},
                  {"pass", pass}};
        r.report = j;
        r.exit_code = pass ? exit_ok : exit_check_failed;
        maybe_write(out_dir, "compat.json", j);
    });
}

std::vector<RunConfig> parse_sweep(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::config, std::string("sweep: malformed JSON: ") + e.what());
    }
    if (!root.is_object() || !root.contains("runs") || !root.at("runs").is_array()) {
        fail(ErrorKind::config, "sweep: expected an object with a 'runs' array");
    }
    std::vector<RunConfig> out;
    for (const json& run : root.at("runs")) out.push_back(parse_run_config(run.dump()));
    if (out.empty()) fail(ErrorKind::config, "sweep: no runs");
    return out;
}

CommandResult sweep_command(const std::vector<RunConfig>& configs, const std::string& out_dir, int workers) {
    if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min<int>(workers, static_cast<int>(configs.size()));

    std::vector<CommandResult> results(configs.size());
    std::mutex mutex;
    std::size_t next = 0;
    auto worker = [&] {
        for (;;) {
            std::size_t k;
            {
                std::lock_guard<std::mutex> lock(mutex);
                if (next >= configs.size()) return;
                k = next++;
            }
            const std::string dir = (fs::path(out_dir) / ("run_" + std::to_string(k))).string();
            results[k] = run_command(configs[k], dir);
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    CommandResult r;
    json runs = json::array();
    for (std::size_t k = 0; k < results.size(); ++k) {
        runs.push_back({{"index", k},
                        {"dir", "run_" + std::to_string(k)},
                        {"exit_code", results[k].exit_code},
                        {"error", results[k].error}});
        r.exit_code = std::max(r.exit_code, results[k].exit_code);
    }
    r.report = {{"schema", "kfl.sweep/1"}, {"runs", runs}};
    maybe_write(out_dir, "sweep.json", r.report);
    return r;
}

}  // namespace kfl
