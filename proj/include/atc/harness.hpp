#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atc/coupling.hpp"
#include "atc/domain_mesh.hpp"

namespace atc {

/// One point of a convergence sweep.
struct ConvergenceRecord {
    long r_core = 0;
    long r_a = 0;
    long r_c = 0;
    long dof = 0;
    double err_l2 = 0.0;
    double err_inf = 0.0;
    double objective = 0.0;
    int newton_iters = 0;
    double residual = 0.0;
    double wall_time = 0.0;
    bool converged = false;

    bool operator==(const ConvergenceRecord&) const = default;
};

struct RunOptions {
    NormKind norm = NormKind::energy;
    NewtonOptions newton;
    bool record_timing = true;  // wall_time = 0 when false
};

/// Everything a single solve produces, for callers that need more than the record.
struct RunArtifacts {
    CouplingProblem problem;
    SystemState state;
    NewtonDiagnostics diagnostics;
    LatticeDisplacement atc;    // on [-R_c - 1, R_c + 1], zero outside [-R_c + 1, R_c - 1]
    LatticeDisplacement exact;  // closed form on the same sites
    ConvergenceRecord record;
};

/// Build decomposition and mesh, manufacture forces, solve, assemble u^atc, measure errors.
/// Non-convergence is reported through record.converged; invalid parameters throw UsageError.
RunArtifacts solve_single(long r_core, double gamma, const RunOptions& opts = {},
                          const LatticeDisplacement* warm_start = nullptr);
ConvergenceRecord run_single(long r_core, double gamma, const RunOptions& opts = {});

struct SweepOptions {
    bool warm_start = false;  // chain the previous composite solution as initial guess
    unsigned threads = 1;     // ignored when warm_start is set
};

/// Records in input order. A failing point yields an unconverged record; the sweep continues.
std::vector<ConvergenceRecord> run_sweep(std::span<const long> r_cores, double gamma, const RunOptions& opts = {},
                                         const SweepOptions& sweep = {});

/// Least-squares slope of log(y) against log(x).
double fit_log_log_slope(std::span<const double> x, std::span<const double> y);
/// Slope of log err_l2 against log dof over converged records (at least three).
double fit_rate(std::span<const ConvergenceRecord> records);

inline constexpr const char* kCsvHeader =
    "r_core,r_a,r_c,dof,err_l2,err_inf,objective,newton_iters,residual,wall_time,converged";

void write_csv(std::ostream& out, std::span<const ConvergenceRecord> records);
std::vector<ConvergenceRecord> read_csv(std::istream& in);
/// Two whitespace-separated columns "dof err_l2" with a '#' comment header (gnuplot).
void write_plot_data(std::ostream& out, std::span<const ConvergenceRecord> records);

}  // namespace atc
