#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "kfl/config.hpp"
#include "kfl/flow.hpp"
#include "kfl/trajectory.hpp"

namespace kfl {

inline constexpr const char* kTrajectoryCsvSchema = "kfl.trajectory/1";
inline constexpr const char* kSummarySchema = "kfl.summary/1";
inline constexpr const char* kSnapshotSchema = "kfl.snapshot/1";
inline constexpr const char* kTrajectoryCsvHeader = "t,Y,Y_1_0,Y_1_1,Y_2_0,nu,futaki,lambda_min,sup_gdot,area";

// Process exit codes shared by every subcommand.
enum ExitCode : int {
    exit_ok = 0,
    exit_unexpected = 1,
    exit_config = 2,
    exit_blow_up = 3,
    exit_check_failed = 4,
    exit_numerical = 5,
};

int exit_code_for(ErrorKind kind);

// Shortest round-trip decimal form; the CSV and snapshot files use it so that
// equal doubles always print identically.
std::string format_double(double x);

// RFC 4180 quoting: fields containing a comma, quote, or line break are quoted
// with inner quotes doubled.
std::string csv_field(const std::string& s);

struct RateFit {
    bool applicable = false;
    std::string reason;
    double t1 = 0.0, t2 = 0.0;
    int points = 0;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double reference = 0.0;  // 2 lambda_ref
    double gap = 0.0;        // |slope + 2 lambda_ref| / (2 lambda_ref)
    double slope_first_half = 0.0;
    double slope_second_half = 0.0;
};

struct RateFitOptions {
    double y_low = 1e-10;
    double y_high = 1e-4;
    int min_points = 20;
};

// Least-squares fit of log Y against t on the last contiguous run of points
// with Y in [y_low, y_high].
RateFit rate_fit(const std::vector<std::pair<double, double>>& series, double lambda_ref,
                 const RateFitOptions& options = {});

nlohmann::json to_json(const RateFit& fit);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

// Text snapshot: '#' header lines, then one row "xi u h R" per node.
void write_snapshot(std::ostream& out, const FlowState& s);

struct ResidualSummary {
    double max_total = 0.0;
    double max_time_part = 0.0;
    double max_grid_part = 0.0;
    double max_alternate = 0.0;
    double scale = 0.0;     // size of the evolved quantity
    double relative = 0.0;  // max_total / scale
    double limit = 0.0;
    bool exceeded = false;
};

struct RunSummary {
    RunConfig config;
    Trajectory trajectory;
    RateFit fit;
    double lambda_final = 0.0;
    ResidualSummary h_flow, y_dot, delta_h;
    EquivalenceReport equivalence;
    bool residuals_available = false;

    bool residual_exceeded() const { return h_flow.exceeded || y_dot.exceeded || delta_h.exceeded; }
};

// Runs the flow and evaluates the fit and residual diagnostics. Blow-up is
// reported through the trajectory status.
RunSummary execute_run(const RunConfig& config);

nlohmann::json summary_json(const RunSummary& summary);

// Writes trajectory.csv, summary.json, config.json, and snapshot_<k>.txt into
// `dir`, creating it. Returns the exit code the run maps to.
int write_run_artifacts(const RunSummary& summary, const std::string& dir);

// Subcommand bodies. Each writes its report to `out_dir` (when non-empty) and
// to `report` and returns the process exit code; errors are mapped, not thrown.
struct CommandResult {
    int exit_code = exit_ok;
    nlohmann::json report;
    std::string error;
};

CommandResult run_command(const RunConfig& config, const std::string& out_dir);
CommandResult spectrum_command(const RunConfig& config, const std::string& out_dir);
CommandResult curvop_command(const std::string& text, std::optional<double> bound, const std::string& out_dir);
CommandResult compat_command(const std::string& text, const std::string& out_dir);

// Runs each config in its own subdirectory run_<index> on a small thread pool.
CommandResult sweep_command(const std::vector<RunConfig>& configs, const std::string& out_dir, int workers = 0);
std::vector<RunConfig> parse_sweep(const std::string& text);

}  // namespace kfl
