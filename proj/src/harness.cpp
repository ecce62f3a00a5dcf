#include "atc/harness.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "atc/errors.hpp"
#include "atc/oracle.hpp"

namespace atc {

namespace {

SystemState initial_state(const CouplingProblem& problem, const LatticeDisplacement* warm) {
    SystemState s = problem.zero_state();
    if (warm == nullptr) return s;
    for (long xi = s.u_a.first; xi <= s.u_a.range().last; ++xi) s.u_a[xi] = warm->at(xi);
    const auto& cont = problem.continuum();
    for (std::size_t k = 0; k < cont.half_size(); ++k) {
        s.u_c.right[static_cast<Eigen::Index>(k)] = warm->at(cont.right().nodes[k]);
        s.u_c.left[static_cast<Eigen::Index>(k)] = warm->at(-cont.left().nodes[k]);
    }
    return s;
}

LatticeDisplacement padded(const LatticeDisplacement& u, long r_c) {
    LatticeDisplacement out = LatticeDisplacement::zeros({-r_c - 1, r_c + 1});
    for (long xi = u.first; xi <= u.range().last; ++xi) out[xi] = u.at(xi);
    return out;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

template <class T>
T parse_field(const std::string& text, const char* name) {
    std::istringstream in(text);
    T value{};
    in >> value;
    if (in.fail() || !(in >> std::ws).eof()) throw UsageError(std::string("bad CSV value for ") + name + ": '" + text + "'");
    return value;
}

double parse_double(const std::string& text, const char* name) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw UsageError("");
        return v;
    } catch (const std::exception&) {
        throw UsageError(std::string("bad CSV value for ") + name + ": '" + text + "'");
    }
}

}  // namespace

RunArtifacts solve_single(long r_core, double gamma, const RunOptions& opts, const LatticeDisplacement* warm_start) {
    const auto start = std::chrono::steady_clock::now();
    CouplingProblem problem = CouplingProblem::manufactured(r_core, gamma, opts.norm);
    const auto& dec = problem.decomposition();

    NewtonResult result = newton_iterate(problem, initial_state(problem, warm_start), opts.newton);
    LatticeDisplacement atc = padded(assemble_atc_solution(problem, result.state), dec.r_c());
    LatticeDisplacement exact = sample_exact_solution(atc.range(), gamma);

    ConvergenceRecord rec;
    rec.r_core = dec.r_core();
    rec.r_a = dec.r_a();
    rec.r_c = dec.r_c();
    rec.dof = count_dof(dec, problem.mesh());
    rec.err_l2 = energy_seminorm_error(atc, exact);
    rec.err_inf = max_norm_error(atc, exact);
    rec.objective = problem.objective(result.state.u_a, result.state.u_c);
    rec.newton_iters = result.diagnostics.iterations;
    rec.residual = result.diagnostics.final_residual;
    rec.converged = result.diagnostics.converged;
    if (opts.record_timing)
        rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    return RunArtifacts{std::move(problem), std::move(result.state), std::move(result.diagnostics), std::move(atc),
                        std::move(exact), rec};
}

ConvergenceRecord run_single(long r_core, double gamma, const RunOptions& opts) {
    return solve_single(r_core, gamma, opts).record;
}

std::vector<ConvergenceRecord> run_sweep(std::span<const long> r_cores, double gamma, const RunOptions& opts,
                                         const SweepOptions& sweep) {
    // Parameter errors are caller errors: reject the whole sweep before doing any work.
    for (long r_core : r_cores) (void)DomainDecomposition::optimal(r_core, gamma, opts.norm);

    const auto guarded = [&](long r_core, const LatticeDisplacement* warm,
                             std::optional<LatticeDisplacement>* keep) -> ConvergenceRecord {
        try {
            RunArtifacts run = solve_single(r_core, gamma, opts, warm);
            if (keep != nullptr) *keep = std::move(run.atc);
            return run.record;
        } catch (const std::exception&) {
            ConvergenceRecord failed;
            failed.r_core = r_core;
            const auto radii = optimal_radii(r_core, gamma, 1, opts.norm);
            failed.r_a = radii.r_a;
            failed.r_c = radii.r_c;
            return failed;
        }
    };

    std::vector<ConvergenceRecord> out(r_cores.size());
    if (sweep.warm_start) {
        std::optional<LatticeDisplacement> previous;
        for (std::size_t i = 0; i < r_cores.size(); ++i) {
            std::optional<LatticeDisplacement> next;
            out[i] = guarded(r_cores[i], previous ? &*previous : nullptr, &next);
            if (next) previous = std::move(next);
        }
        return out;
    }
    if (sweep.threads <= 1) {
        for (std::size_t i = 0; i < r_cores.size(); ++i) out[i] = guarded(r_cores[i], nullptr, nullptr);
        return out;
    }
    for (std::size_t begin = 0; begin < r_cores.size(); begin += sweep.threads) {
        std::vector<std::future<ConvergenceRecord>> batch;
        const std::size_t end = std::min(r_cores.size(), begin + sweep.threads);
        for (std::size_t i = begin; i < end; ++i)
            batch.push_back(std::async(std::launch::async, guarded, r_cores[i], nullptr, nullptr));
        for (std::size_t i = begin; i < end; ++i) out[i] = batch[i - begin].get();
    }
    return out;
}

double fit_log_log_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw UsageError("slope fit needs equally many x and y values");
    if (x.size() < 2) throw UsageError("slope fit needs at least two points");
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw UsageError("log-log fit needs positive data");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) throw UsageError("slope fit needs distinct x values");
    return sxy / sxx;
}

double fit_rate(std::span<const ConvergenceRecord> records) {
    std::vector<double> dof;
    std::vector<double> err;
    for (const auto& r : records) {
        if (!r.converged) continue;
        dof.push_back(static_cast<double>(r.dof));
        err.push_back(r.err_l2);
    }
    if (dof.size() < 3) throw UsageError("rate fit needs at least three converged records");
    return fit_log_log_slope(dof, err);
}

void write_csv(std::ostream& out, std::span<const ConvergenceRecord> records) {
    std::ostringstream buf;
    buf << std::setprecision(17);
    buf << kCsvHeader << '\n';
    for (const auto& r : records)
        buf << r.r_core << ',' << r.r_a << ',' << r.r_c << ',' << r.dof << ',' << r.err_l2 << ',' << r.err_inf << ','
            << r.objective << ',' << r.newton_iters << ',' << r.residual << ',' << r.wall_time << ','
            << (r.converged ? 1 : 0) << '\n';
    out << buf.str();
}

std::vector<ConvergenceRecord> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw UsageError("empty CSV input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw UsageError("unexpected CSV header: " + line);

    std::vector<ConvergenceRecord> out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != 11) throw UsageError("CSV row needs 11 fields: " + line);
        ConvergenceRecord r;
        r.r_core = parse_field<long>(f[0], "r_core");
        r.r_a = parse_field<long>(f[1], "r_a");
        r.r_c = parse_field<long>(f[2], "r_c");
        r.dof = parse_field<long>(f[3], "dof");
        r.err_l2 = parse_double(f[4], "err_l2");
        r.err_inf = parse_double(f[5], "err_inf");
        r.objective = parse_double(f[6], "objective");
        r.newton_iters = parse_field<int>(f[7], "newton_iters");
        r.residual = parse_double(f[8], "residual");
        r.wall_time = parse_double(f[9], "wall_time");
        const int converged = parse_field<int>(f[10], "converged");
        if (converged != 0 && converged != 1) throw UsageError("converged must be 0 or 1");
        r.converged = converged == 1;
        out.push_back(r);
    }
    return out;
}

void write_plot_data(std::ostream& out, std::span<const ConvergenceRecord> records) {
    std::ostringstream buf;
    buf << std::setprecision(17) << "# dof err_l2\n";
    for (const auto& r : records)
        if (r.converged) buf << r.dof << ' ' << r.err_l2 << '\n';
    out << buf.str();
}

}  // namespace atc
