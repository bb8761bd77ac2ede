// kfl: command-line front end for flow runs, spectra, and pointwise curvature checks.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "kfl/config.hpp"
#include "kfl/error.hpp"
#include "kfl/report.hpp"

namespace {

struct Common {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config = true) {
    auto* opt = cmd->add_option("--config", c.config_path, "input file");
    if (needs_config) opt->required();
    cmd->add_option("--out", c.out_dir, "output directory");
    cmd->add_option("--seed", c.seed, "random seed, overriding the config");
    cmd->add_flag("--quiet", c.quiet, "suppress the report on stdout");
}

kfl::RunConfig load(const Common& c) {
    kfl::RunConfig cfg = kfl::load_run_config(c.config_path);
    if (c.seed) cfg.seed = *c.seed;
    return cfg;
}

int finish(const kfl::CommandResult& r, const Common& c) {
    if (!r.error.empty()) std::cerr << "kfl: " << r.error << "\n";
    if (!c.quiet && !r.report.is_null()) std::cout << r.report.dump(2) << "\n";
    return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kahler-Ricci flow experiments on the round two-sphere"};
    app.require_subcommand(1);

    Common run_opts, spectrum_opts, curvop_opts, compat_opts, sweep_opts;
    std::optional<double> bound;
    int workers = 0;

    auto* run = app.add_subcommand("run", "integrate the flow and write trajectory artifacts");
    add_common(run, run_opts);
    auto* spectrum = app.add_subcommand("spectrum", "dbar-Laplacian spectrum of the initial metric");
    add_common(spectrum, spectrum_opts);
    auto* curvop = app.add_subcommand("curvop", "curvature operator checks for a pointwise tensor file");
    add_common(curvop, curvop_opts);
    curvop->add_option("--bound", bound, "scalar curvature bound C (defaults to R)");
    auto* compat = app.add_subcommand("compat", "Hermitian compatibility of a metric and complex structure");
    add_common(compat, compat_opts);
    auto* sweep = app.add_subcommand("sweep", "run a list of configs in parallel");
    add_common(sweep, sweep_opts);
    sweep->add_option("--workers", workers, "worker threads (default: hardware concurrency)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kfl::exit_ok : kfl::exit_config;
    }

    try {
        if (*run) {
            const kfl::RunConfig cfg = load(run_opts);
            return finish(kfl::run_command(cfg, run_opts.out_dir), run_opts);
        }
        if (*spectrum) {
            return finish(kfl::spectrum_command(load(spectrum_opts), spectrum_opts.out_dir), spectrum_opts);
        }
        if (*curvop) {
            return finish(kfl::curvop_command(kfl::read_file(curvop_opts.config_path), bound, curvop_opts.out_dir),
                          curvop_opts);
        }
        if (*compat) {
            return finish(kfl::compat_command(kfl::read_file(compat_opts.config_path), compat_opts.out_dir),
                          compat_opts);
        }
        if (*sweep) {
            auto configs = kfl::parse_sweep(kfl::read_file(sweep_opts.config_path));
            if (sweep_opts.seed) {
                for (auto& c : configs) c.seed = *sweep_opts.seed;
            }
            const std::string out = sweep_opts.out_dir.empty() ? std::string("sweep_out") : sweep_opts.out_dir;
            return finish(kfl::sweep_command(configs, out, workers), sweep_opts);
        }
    } catch (const kfl::Error& e) {
        std::cerr << "kfl: " << e.what() << "\n";
        return kfl::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "kfl: unexpected error: " << e.what() << "\n";
        return kfl::exit_unexpected;
    }
    return kfl::exit_unexpected;
}
