#include <fstream>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "atc/atc.hpp"

namespace py = pybind11;

namespace {

atc::NormKind parse_norm(const std::string& s) {
    if (s == "energy") return atc::NormKind::energy;
    if (s == "uniform") return atc::NormKind::uniform;
    throw atc::UsageError("norm must be 'energy' or 'uniform', got '" + s + "'");
}

atc::RunOptions make_options(const std::string& norm, const std::string& hessian, double tol, int max_iter,
                             bool timing) {
    atc::RunOptions o;
    o.norm = parse_norm(norm);
    if (hessian == "full")
        o.newton.hessian_mode = atc::HessianMode::full_newton;
    else if (hessian == "gauss")
        o.newton.hessian_mode = atc::HessianMode::gauss_newton;
    else
        throw atc::UsageError("hessian must be 'full' or 'gauss', got '" + hessian + "'");
    o.newton.tolerance = tol;
    o.newton.max_iterations = max_iter;
    o.newton.validate();
    o.record_timing = timing;
    return o;
}

Eigen::VectorXd site_range(const atc::LatticeDisplacement& u) {
    return Eigen::VectorXd::LinSpaced(u.values.size(), static_cast<double>(u.first),
                                      static_cast<double>(u.range().last));
}

}  // namespace

PYBIND11_MODULE(_atc, m) {
    m.doc() = "Optimization-based atomistic-to-continuum coupling for a 1D Lennard-Jones chain.";

    auto base = py::register_exception<atc::UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<atc::IllPosedParameters>(m, "IllPosedParameters", base.ptr());
    py::register_exception<atc::DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<atc::ConfigurationError>(m, "ConfigurationError", PyExc_RuntimeError);
    py::register_exception<atc::NonConvergence>(m, "NonConvergence", PyExc_RuntimeError);
    py::register_exception<atc::SolverError>(m, "SolverError", PyExc_RuntimeError);

    m.def("phi", &atc::phi, py::arg("r"), "Normalized Lennard-Jones pair potential r^-12 - 2 r^-6.");
    m.def("phi_d1", &atc::phi_d1, py::arg("r"));
    m.def("cauchy_born_W", &atc::cauchy_born_W, py::arg("strain"), "Cauchy-Born energy density, W(0) = 0.");
    m.def("cauchy_born_W_d1", &atc::cauchy_born_W_d1, py::arg("strain"));
    m.def(
        "site_energy",
        [](const std::vector<double>& stencil) {
            const atc::LatticeModel model;
            return atc::site_energy(atc::FiniteDifferenceStencil(model, stencil), model);
        },
        py::arg("stencil"), "Site energy for finite differences (D_-2 u, D_-1 u, D_1 u, D_2 u).");
    m.def("exact_solution", &atc::exact_solution, py::arg("xi"), py::arg("gamma"));

    m.def(
        "optimal_radii",
        [](long r_core, double gamma, const std::string& norm) {
            const auto r = atc::optimal_radii(r_core, gamma, 1, parse_norm(norm));
            return py::make_tuple(r.r_a, r.r_c);
        },
        py::arg("r_core"), py::arg("gamma"), py::arg("norm") = "energy", "(R_a, R_c) for a core radius.");
    m.def(
        "mesh_size",
        [](double x, long r_a, double gamma, const std::string& norm) {
            return atc::mesh_size(x, r_a, gamma, 1, parse_norm(norm));
        },
        py::arg("x"), py::arg("r_a"), py::arg("gamma"), py::arg("norm") = "energy");
    m.def(
        "graded_mesh",
        [](long r_core, double gamma, const std::string& norm) {
            const auto dec = atc::DomainDecomposition::optimal(r_core, gamma, parse_norm(norm));
            return atc::build_graded_mesh(dec, gamma, parse_norm(norm)).nodes();
        },
        py::arg("r_core"), py::arg("gamma"), py::arg("norm") = "energy", "Mesh nodes on [-R_c, R_c].");
    m.def(
        "count_dof",
        [](long r_core, double gamma, const std::string& norm) {
            const auto dec = atc::DomainDecomposition::optimal(r_core, gamma, parse_norm(norm));
            return atc::count_dof(dec, atc::build_graded_mesh(dec, gamma, parse_norm(norm)));
        },
        py::arg("r_core"), py::arg("gamma"), py::arg("norm") = "energy");

    py::class_<atc::ConvergenceRecord>(m, "ConvergenceRecord")
        .def(py::init<>())
        .def_readwrite("r_core", &atc::ConvergenceRecord::r_core)
        .def_readwrite("r_a", &atc::ConvergenceRecord::r_a)
        .def_readwrite("r_c", &atc::ConvergenceRecord::r_c)
        .def_readwrite("dof", &atc::ConvergenceRecord::dof)
        .def_readwrite("err_l2", &atc::ConvergenceRecord::err_l2)
        .def_readwrite("err_inf", &atc::ConvergenceRecord::err_inf)
        .def_readwrite("objective", &atc::ConvergenceRecord::objective)
        .def_readwrite("newton_iters", &atc::ConvergenceRecord::newton_iters)
        .def_readwrite("residual", &atc::ConvergenceRecord::residual)
        .def_readwrite("wall_time", &atc::ConvergenceRecord::wall_time)
        .def_readwrite("converged", &atc::ConvergenceRecord::converged)
        .def(py::self == py::self)
        .def("__repr__", [](const atc::ConvergenceRecord& r) {
            return "ConvergenceRecord(r_core=" + std::to_string(r.r_core) + ", dof=" + std::to_string(r.dof) +
                   ", err_l2=" + std::to_string(r.err_l2) + ", converged=" + (r.converged ? "True" : "False") + ")";
        });

    m.def(
        "run_single",
        [](long r_core, double gamma, const std::string& norm, const std::string& hessian, double tol, int max_iter,
           bool timing) {
            const auto opts = make_options(norm, hessian, tol, max_iter, timing);
            py::gil_scoped_release release;
            return atc::run_single(r_core, gamma, opts);
        },
        py::arg("r_core"), py::arg("gamma"), py::arg("norm") = "energy", py::arg("hessian") = "full",
        py::arg("tol") = 1e-10, py::arg("max_iter") = 50, py::arg("timing") = true);

    m.def(
        "solve",
        [](long r_core, double gamma, const std::string& norm, const std::string& hessian, double tol, int max_iter) {
            const auto opts = make_options(norm, hessian, tol, max_iter, false);
            py::gil_scoped_release release;
            auto run = atc::solve_single(r_core, gamma, opts);
            py::gil_scoped_acquire acquire;
            py::list history;
            for (const auto& it : run.diagnostics.history)
                history.append(py::dict(py::arg("iter") = it.iter, py::arg("residual") = it.residual,
                                        py::arg("step_length") = it.step_length, py::arg("objective") = it.objective));
            return py::dict(py::arg("sites") = site_range(run.atc), py::arg("u_atc") = run.atc.values,
                            py::arg("u_exact") = run.exact.values, py::arg("record") = run.record,
                            py::arg("newton") = history);
        },
        py::arg("r_core"), py::arg("gamma"), py::arg("norm") = "energy", py::arg("hessian") = "full",
        py::arg("tol") = 1e-10, py::arg("max_iter") = 50,
        "Solve one problem; returns the composite and closed-form fields with the record and Newton history.");

    m.def(
        "reference_solution",
        [](long r_core, double gamma) {
            const auto dec = atc::DomainDecomposition::optimal(r_core, gamma, atc::NormKind::energy);
            py::gil_scoped_release release;
            auto ref = atc::solve_full_atomistic(dec, gamma);
            py::gil_scoped_acquire acquire;
            return py::make_tuple(site_range(ref.values), ref.values.values);
        },
        py::arg("r_core"), py::arg("gamma"), "Full atomistic solve on [-R_c, R_c]: (sites, displacement).");

    m.def(
        "run_sweep",
        [](const std::vector<long>& r_cores, double gamma, const std::string& norm, const std::string& hessian,
           double tol, int max_iter, bool timing, unsigned threads, bool warm_start) {
            const auto opts = make_options(norm, hessian, tol, max_iter, timing);
            atc::SweepOptions sweep;
            sweep.threads = threads;
            sweep.warm_start = warm_start;
            py::gil_scoped_release release;
            return atc::run_sweep(r_cores, gamma, opts, sweep);
        },
        py::arg("r_cores"), py::arg("gamma"), py::arg("norm") = "energy", py::arg("hessian") = "full",
        py::arg("tol") = 1e-10, py::arg("max_iter") = 50, py::arg("timing") = true, py::arg("threads") = 1,
        py::arg("warm_start") = false);

    m.def(
        "fit_rate", [](const std::vector<atc::ConvergenceRecord>& records) { return atc::fit_rate(records); },
        py::arg("records"), "Slope of log err_l2 against log dof over converged records.");
    m.def(
        "write_csv",
        [](const std::vector<atc::ConvergenceRecord>& records, const std::string& path) {
            std::ofstream out(path);
            if (!out) throw atc::UsageError("cannot open " + path);
            atc::write_csv(out, records);
        },
        py::arg("records"), py::arg("path"));
    m.def(
        "read_csv",
        [](const std::string& path) {
            std::ifstream in(path);
            if (!in) throw atc::UsageError("cannot open " + path);
            return atc::read_csv(in);
        },
        py::arg("path"));
    m.attr("CSV_HEADER") = atc::kCsvHeader;
}
