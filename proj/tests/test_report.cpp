#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "kfl/config.hpp"
#include "kfl/error.hpp"
#include "kfl/report.hpp"

using namespace kfl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("kfl_test_" + name);
    fs::remove_all(p);
    return p;
}

const char* kSmallRun = R"({
  "grid": {"n": 64},
  "perturbation": {"amplitude": 0.05, "coefficients": [0, 0, 1, 0.5]},
  "time": {"t_end": 0.5, "cadence": 0.1},
  "output": {"snapshot_times": [0, 0.5]}
})";

std::vector<std::pair<double, double>> exponential(double rate, double t0, double t1, double dt, double noise = 0.0) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<std::pair<double, double>> s;
    for (double t = t0; t <= t1 + 1e-12; t += dt) s.emplace_back(t, std::exp(-rate * t) * (1.0 + noise * unit(rng)));
    return s;
}

}  // namespace

TEST(RateFit, RecoversAnExactExponential) {
    const RateFit f = rate_fit(exponential(3.0, 0.0, 10.0, 0.1), 1.5);
    ASSERT_TRUE(f.applicable) << f.reason;
    EXPECT_NEAR(f.slope, -3.0, 1e-10);
    EXPECT_NEAR(f.gap, 0.0, 1e-10);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
    EXPECT_GE(f.t1, 3.0);
    EXPECT_LE(f.t2, 7.7);
}

TEST(RateFit, ToleratesOnePercentNoise) {
    const RateFit f = rate_fit(exponential(3.0, 0.0, 10.0, 0.1, 0.01), 1.5);
    ASSERT_TRUE(f.applicable);
    EXPECT_LT(f.gap, 0.02);
    EXPECT_GT(f.r_squared, 0.99);
}

TEST(RateFit, ReportsWhyItDoesNotApply) {
    EXPECT_FALSE(rate_fit(exponential(3.0, 0.0, 10.0, 1.0), 1.5).applicable);
    const RateFit empty = rate_fit(exponential(0.1, 0.0, 5.0, 0.1), 0.05);
    EXPECT_FALSE(empty.applicable);
    EXPECT_FALSE(empty.reason.empty());
    EXPECT_FALSE(rate_fit({}, 1.0).applicable);
}

TEST(RateFit, JsonKeysMatchGolden) {
    const nlohmann::json j = to_json(rate_fit(exponential(3.0, 0.0, 10.0, 0.1), 1.5));
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    EXPECT_EQ(keys, lines_of(slurp(fs::path(KFL_GOLDEN_DIR) / "rate_fit_keys.txt")));
}

TEST(Formatting, DoublesRoundTripAndCsvQuoting) {
    for (double x : {0.1, 1.0 / 3.0, 6.02e23, -2.5e-300, 0.0}) EXPECT_EQ(std::stod(format_double(x)), x);
    EXPECT_EQ(format_double(NAN), "nan");
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
}

TEST(Config, ParsesDefaultsAndRoundTrips) {
    const RunConfig c = parse_run_config(kSmallRun);
    EXPECT_EQ(c.flow.n, 64);
    EXPECT_FALSE(c.flow.dt.has_value());
    const RunConfig again = parse_run_config(to_json(c).dump());
    EXPECT_EQ(to_json(again), to_json(c));
}

TEST(Config, RejectsBadInput) {
    const char* bad[] = {
        "{",
        R"({"grid": {"n": 16}})",
        R"({"grid": {"n": 64, "m": 1}})",
        R"({"colour": 1})",
        R"({"schema": "kfl.run/9"})",
        R"({"time": {"cadence": "fast"}})",
        R"({"perturbation": {"random_terms": 40}})",
        R"({"tolerances": {"h_residual": 0}})",
        R"({"seed": -3})",
        R"({"perturbation": {"amplitude": 0.9, "coefficients": [0, 1]}})",
    };
    for (const char* text : bad) {
        try {
            parse_run_config(text);
            ADD_FAILURE() << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::config) << text;
        }
    }
}

TEST(Config, SeededRandomTermsAreReproducible) {
    RunConfig c = parse_run_config(R"({"grid": {"n": 64}, "perturbation": {"amplitude": 0.05, "random_terms": 4,
                                      "random_scale": 0.5}, "seed": 12})");
    const auto a = resolved_flow_config(c).initial.coefficients;
    EXPECT_EQ(a, resolved_flow_config(c).initial.coefficients);
    ASSERT_EQ(a.size(), 5u);
    for (std::size_t j = 1; j < a.size(); ++j) EXPECT_LE(std::abs(a[j]), 0.5);
    c.seed = 13;
    EXPECT_NE(a, resolved_flow_config(c).initial.coefficients);
}

TEST(Artifacts, RunWritesGoldenShapedFiles) {
    const fs::path dir = scratch_dir("artifacts");
    const CommandResult r = run_command(parse_run_config(kSmallRun), dir.string());
    EXPECT_EQ(r.exit_code, exit_ok) << r.error;
    const auto csv = lines_of(slurp(dir / "trajectory.csv"));
    ASSERT_EQ(csv.size(), 7u);
    EXPECT_EQ(csv[0] + "\n", slurp(fs::path(KFL_GOLDEN_DIR) / "trajectory_header.csv"));
    for (std::size_t k = 1; k < csv.size(); ++k) EXPECT_EQ(std::count(csv[k].begin(), csv[k].end(), ','), 9);

    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    std::vector<std::string> keys;
    for (const auto& [k, v] : summary.items()) keys.push_back(k);
    EXPECT_EQ(keys, lines_of(slurp(fs::path(KFL_GOLDEN_DIR) / "summary_keys.txt")));
    EXPECT_EQ(summary["schema"], kSummarySchema);
    EXPECT_EQ(summary["records"], 6);

    EXPECT_EQ(parse_run_config(slurp(dir / "config.json")).flow.n, 64);
    const auto snap = lines_of(slurp(dir / "snapshot_1.txt"));
    EXPECT_EQ(snap[0], std::string("# ") + kSnapshotSchema);
    EXPECT_EQ(snap.size(), 7u + 64u);
    EXPECT_FALSE(fs::exists(dir / "snapshot_2.txt"));
    fs::remove_all(dir);
}

TEST(Artifacts, RepeatedRunsAreByteIdentical) {
    const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
    const RunConfig c = parse_run_config(kSmallRun);
    run_command(c, a.string());
    run_command(c, b.string());
    EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(b / "trajectory.csv"));
    EXPECT_EQ(slurp(a / "snapshot_1.txt"), slurp(b / "snapshot_1.txt"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(ExitCodes, ErrorKindsMapToDocumentedCodes) {
    EXPECT_EQ(exit_code_for(ErrorKind::config), 2);
    EXPECT_EQ(exit_code_for(ErrorKind::blow_up), 3);
    EXPECT_EQ(exit_code_for(ErrorKind::input), 4);
    for (ErrorKind k : {ErrorKind::degeneracy, ErrorKind::numerical, ErrorKind::degenerate_metric,
                        ErrorKind::solvability, ErrorKind::step_size, ErrorKind::capability})
        EXPECT_EQ(exit_code_for(k), 5);
}

TEST(ExitCodes, TightResidualLimitFailsTheRun) {
    RunConfig c = parse_run_config(kSmallRun);
    c.tolerances.h_residual = 1e-9;
    const fs::path dir = scratch_dir("tight");
    const CommandResult r = run_command(c, dir.string());
    EXPECT_EQ(r.exit_code, exit_check_failed);
    EXPECT_TRUE(r.report["residuals"]["h_flow"]["exceeded"].get<bool>());
    fs::remove_all(dir);
}

TEST(Commands, SpectrumOfTheRoundSphere) {
    const CommandResult r = spectrum_command(parse_run_config(R"({"grid": {"n": 128}})"), "");
    EXPECT_EQ(r.exit_code, exit_ok);
    EXPECT_EQ(r.report["kernel_dim"], 3);
    EXPECT_NEAR(r.report["lambda_min"].get<double>(), 2.0, 1e-3);
}

TEST(Commands, CompatClassifiesPairs) {
    EXPECT_EQ(compat_command(R"({"g": [[1, 0], [0, 1]], "J": [[0, -1], [1, 0]]})", "").exit_code, exit_ok);
    const CommandResult bad = compat_command(R"({"g": [[1, 0], [0, 2]], "J": [[0, -1], [1, 0]]})", "");
    EXPECT_EQ(bad.exit_code, exit_check_failed);
    EXPECT_NEAR(bad.report["residual"].get<double>(), 1.0, 1e-14);
    EXPECT_EQ(compat_command(R"({"g": [[1, 0], [0, 1]]})", "").exit_code, exit_config);
    EXPECT_EQ(compat_command(R"({"g": [[1, 0], [0, 1]], "J": [[1, 0], [0, 1]]})", "").exit_code, exit_check_failed);
}

TEST(Commands, CurvopOnEinsteinAndBrokenFiles) {
    std::string einstein;
    for (int a = 1; a <= 2; ++a)
        for (int b = 1; b <= 2; ++b)
            for (int c = 1; c <= 2; ++c)
                for (int d = 1; d <= 2; ++d)
                    einstein += std::to_string(a) + " " + std::to_string(b) + " " + std::to_string(c) + " " +
                                std::to_string(d) + " " + std::to_string((a == b) * (c == d) + (a == d) * (c == b)) +
                                " 0\n";
    const CommandResult ok = curvop_command(einstein, std::nullopt, "");
    EXPECT_EQ(ok.exit_code, exit_ok) << ok.error;
    EXPECT_TRUE(ok.report["pass"].get<bool>());
    EXPECT_EQ(curvop_command(einstein, 5.0, "").exit_code, exit_check_failed);
    EXPECT_EQ(curvop_command("1 1 1 1 1 0\n", std::nullopt, "").exit_code, exit_config);
    std::string broken = einstein;
    broken.replace(broken.find("1 2 2 1 1 0"), 11, "1 2 2 1 1.5 0");
    EXPECT_EQ(curvop_command(broken, std::nullopt, "").exit_code, exit_check_failed);
}

TEST(Commands, SweepIsolatesEachRun) {
    const auto configs = parse_sweep(std::string(R"({"runs": [)") + kSmallRun + "," +
                                     R"({"grid": {"n": 64}, "time": {"t_end": 0.2}}]})");
    ASSERT_EQ(configs.size(), 2u);
    const fs::path dir = scratch_dir("sweep");
    const CommandResult r = sweep_command(configs, dir.string(), 2);
    EXPECT_EQ(r.exit_code, exit_ok);
    EXPECT_TRUE(fs::exists(dir / "run_0" / "trajectory.csv"));
    EXPECT_TRUE(fs::exists(dir / "run_1" / "summary.json"));
    EXPECT_TRUE(fs::exists(dir / "sweep.json"));
    EXPECT_NE(slurp(dir / "run_0" / "trajectory.csv"), slurp(dir / "run_1" / "trajectory.csv"));
    EXPECT_THROW(parse_sweep(R"({"runs": []})"), Error);
    fs::remove_all(dir);
}
