// atc: single solves, R_core sweeps and rate fits for the coupled atomistic/continuum model.
//
//   atc run   --r-core 10 --gamma 1.5 [--norm energy|uniform] [--hessian full|gauss] [--tol T] [--out FILE]
//   atc sweep --r-core 10,20,40,80,160 --gamma 1.5 --out FILE [--plot FILE] [--threads N] [--warm-start]
//   atc rate  FILE
//
// Exit codes: 0 success, 2 usage error, 3 solver non-convergence, 4 internal error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "atc/atc.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kNonConvergence = 3, kInternal = 4 };

struct Settings {
    std::vector<long> r_core;
    double gamma = 1.5;
    atc::NormKind norm = atc::NormKind::energy;
    atc::HessianMode hessian = atc::HessianMode::full_newton;
    double tol = 1e-10;
    int max_iter = 50;
    bool no_timing = false;
    std::string out;
    // run
    std::string diagnostics;
    std::string mesh;
    // sweep
    std::string plot;
    unsigned threads = 1;
    bool warm_start = false;
    // rate
    std::string rate_file;
};

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw atc::UsageError("cannot open output file " + path);
    return out;
}

atc::RunOptions run_options(const Settings& s) {
    atc::RunOptions opts;
    opts.norm = s.norm;
    opts.newton.tolerance = s.tol;
    opts.newton.max_iterations = s.max_iter;
    opts.newton.hessian_mode = s.hessian;
    opts.record_timing = !s.no_timing;
    opts.newton.validate();
    return opts;
}

void emit_csv(const Settings& s, std::span<const atc::ConvergenceRecord> records) {
    if (s.out.empty()) {
        atc::write_csv(std::cout, records);
    } else {
        auto out = open_output(s.out);
        atc::write_csv(out, records);
    }
}

int cmd_run(const Settings& s) {
    if (s.r_core.size() != 1) throw atc::UsageError("run takes exactly one --r-core value");
    const auto run = atc::solve_single(s.r_core.front(), s.gamma, run_options(s));
    emit_csv(s, std::span(&run.record, 1));
    if (!s.diagnostics.empty()) {
        auto out = open_output(s.diagnostics);
        run.diagnostics.write_csv(out);
    }
    if (!s.mesh.empty()) {
        auto out = open_output(s.mesh);
        atc::write_mesh_dump(out, run.problem.mesh());
    }
    const auto& r = run.record;
    std::fprintf(stderr, "r_core=%ld r_c=%ld dof=%ld err_l2=%.6e newton_iters=%d residual=%.2e %s\n", r.r_core, r.r_c,
                 r.dof, r.err_l2, r.newton_iters, r.residual, r.converged ? "converged" : "NOT CONVERGED");
    return r.converged ? kOk : kNonConvergence;
}

int cmd_sweep(const Settings& s) {
    atc::SweepOptions sweep;
    sweep.threads = s.threads;
    sweep.warm_start = s.warm_start;
    const auto records = atc::run_sweep(s.r_core, s.gamma, run_options(s), sweep);
    emit_csv(s, records);
    if (!s.plot.empty()) {
        auto out = open_output(s.plot);
        atc::write_plot_data(out, records);
    }
    bool all = true;
    std::size_t converged = 0;
    for (const auto& r : records) {
        all = all && r.converged;
        converged += r.converged ? 1 : 0;
        std::fprintf(stderr, "r_core=%ld dof=%ld err_l2=%.6e %s\n", r.r_core, r.dof, r.err_l2,
                     r.converged ? "converged" : "NOT CONVERGED");
    }
    if (converged >= 3) std::fprintf(stderr, "slope=%.4f\n", atc::fit_rate(records));
    return all ? kOk : kNonConvergence;
}

int cmd_rate(const Settings& s) {
    std::ifstream in(s.rate_file);
    if (!in) throw atc::UsageError("cannot open " + s.rate_file);
    const auto records = atc::read_csv(in);
    std::printf("%.6f\n", atc::fit_rate(records));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    Settings s;
    CLI::App app{"Optimization-based atomistic-to-continuum coupling: solves, sweeps and rate fits"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key=value file mirroring the long options; flags override it");

    const std::map<std::string, atc::NormKind> norms{{"energy", atc::NormKind::energy},
                                                     {"uniform", atc::NormKind::uniform}};
    const std::map<std::string, atc::HessianMode> modes{{"full", atc::HessianMode::full_newton},
                                                        {"gauss", atc::HessianMode::gauss_newton}};
    app.add_option("--r-core", s.r_core, "Core radius (comma-separated list for sweep)")->delimiter(',');
    app.add_option("--gamma", s.gamma, "Decay exponent of the manufactured solution")->capture_default_str();
    app.add_option("--norm", s.norm, "Mesh optimized for the energy or uniform norm")
        ->transform(CLI::CheckedTransformer(norms, CLI::ignore_case));
    app.add_option("--hessian", s.hessian, "Newton Hessian: full or gauss")
        ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case));
    app.add_option("--tol", s.tol, "Newton tolerance on max |grad Psi|")->capture_default_str();
    app.add_option("--max-iter", s.max_iter, "Newton iteration limit")->capture_default_str();
    app.add_flag("--no-timing", s.no_timing, "Write wall_time = 0 (bitwise reproducible output)");
    app.add_option("--out", s.out, "CSV output file (stdout if omitted)");

    auto* run = app.add_subcommand("run", "Solve one coupled problem");
    run->add_option("--diagnostics", s.diagnostics, "Newton history CSV");
    run->add_option("--mesh", s.mesh, "Mesh dump, one node per line");

    auto* sweep = app.add_subcommand("sweep", "Solve for a list of core radii");
    sweep->add_option("--plot", s.plot, "Two-column 'dof err_l2' data for gnuplot");
    sweep->add_option("--threads", s.threads, "Concurrent sweep points (ignored with --warm-start)")
        ->check(CLI::PositiveNumber);
    sweep->add_flag("--warm-start", s.warm_start, "Start each point from the previous solution");

    auto* rate = app.add_subcommand("rate", "Fit the log-log slope of err_l2 against dof from a sweep CSV");
    rate->add_option("file", s.rate_file, "Sweep CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (run->parsed()) return cmd_run(s);
        if (sweep->parsed()) return cmd_sweep(s);
        return cmd_rate(s);
    } catch (const atc::NonConvergence& e) {
        std::fprintf(stderr, "atc: %s\n", e.what());
        return kNonConvergence;
    } catch (const std::invalid_argument& e) {  // UsageError, IllPosedParameters
        std::fprintf(stderr, "atc: usage error: %s\n", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "atc: internal error: %s\n", e.what());
        return kInternal;
    }
}
