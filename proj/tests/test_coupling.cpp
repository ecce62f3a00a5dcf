#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "atc/coupling.hpp"
#include "atc/errors.hpp"
#include "test_support.hpp"

using namespace atc;
using atc_test::relative_error;
using atc_test::uniform;

namespace {

constexpr double kGamma = 1.5;

const CouplingProblem& problem10() {
    static const CouplingProblem p = CouplingProblem::manufactured(10, kGamma);
    return p;
}

const NewtonResult& solved10() {
    static const NewtonResult r = newton_solve(problem10(), problem10().zero_state());
    return r;
}

SystemState random_state(const CouplingProblem& p, double lambda_scale = 1.0) {
    SystemState s = p.zero_state();
    s.u_a.values = atc_test::random_vector(s.u_a.values.size(), -0.05, 0.05);
    s.u_c.right = atc_test::random_vector(s.u_c.right.size(), -0.05, 0.05);
    s.u_c.left = atc_test::random_vector(s.u_c.left.size(), -0.05, 0.05);
    s.lambda_a = atc_test::random_vector(s.lambda_a.size(), -lambda_scale, lambda_scale);
    s.lambda_c.right = atc_test::random_vector(s.lambda_c.right.size(), -lambda_scale, lambda_scale);
    s.lambda_c.left = atc_test::random_vector(s.lambda_c.left.size(), -lambda_scale, lambda_scale);
    s.eta = {uniform(-1, 1), uniform(-1, 1)};
    // lambda_c is not a degree of freedom on the core-boundary node
    s.lambda_c.right[0] = 0.0;
    s.lambda_c.left[0] = 0.0;
    return s;
}

// Continuum value at an overlap site, read straight off the nodal vectors.
double uc_at(const CouplingProblem& p, const ContinuumState& u_c, long x) {
    const long r_core = p.decomposition().r_core();
    return x > 0 ? u_c.right[x - r_core] : u_c.left[-x - r_core];
}

}  // namespace

TEST_CASE("KKT layout") {
    const auto& p = problem10();
    const auto& l = p.layout();
    CHECK(l.atomistic == 41);
    CHECK(l.continuum == 2 * 47);  // nodes 10..1222 on each side, 1789 excluded
    CHECK(l.adjoint_atomistic == 33);
    CHECK(l.adjoint_continuum == l.continuum - 2);
    CHECK(l.multipliers == 2);
    CHECK(l.size() == 41 + 94 + 33 + 92 + 2);

    const auto s = random_state(p);
    const auto back = p.unpack(p.pack(s));
    CHECK(back.u_a.values == s.u_a.values);
    CHECK(back.u_c.right == s.u_c.right);
    CHECK(back.lambda_c.left == s.lambda_c.left);
    CHECK(back.eta == s.eta);
}

TEST_CASE("overlap interpolant") {
    const auto& dec = problem10().decomposition();
    auto u = AtomisticState::zeros(dec.lattice_atomistic());
    u.values.setConstant(0.7);
    auto c = interpolate_atomistic(u, dec);
    CHECK(c.value(12.5) == 0.7);
    CHECK(c.value(-17.25) == 0.7);
    CHECK(c.gradient(10) == 0.0);

    const double g = uniform(-0.1, 0.1);
    for (long xi = -20; xi <= 20; ++xi) u[xi] = g * static_cast<double>(xi);
    auto lin = interpolate_atomistic(u, dec);
    for (long xi = 10; xi < 20; ++xi) {
        CHECK(lin.gradient(xi) == doctest::Approx(g).epsilon(1e-13));
        CHECK(lin.gradient(-xi - 1) == doctest::Approx(g).epsilon(1e-13));
    }
    CHECK(lin.value(13.25) == doctest::Approx(g * 13.25).epsilon(1e-13));

    u.values = atc_test::random_vector(u.values.size(), -1, 1);
    auto rnd = interpolate_atomistic(u, dec);
    for (long xi = 10; xi <= 20; ++xi) {
        CHECK(rnd.nodal(xi) == u.at(xi));
        CHECK(rnd.value(static_cast<double>(-xi)) == u.at(-xi));
    }
    CHECK_THROWS_AS(rnd.value(5.0), UsageError);
    CHECK_THROWS_AS(rnd.value(21.0), UsageError);
    CHECK_THROWS_AS(rnd.gradient(20), UsageError);
}

TEST_CASE("objective") {
    const auto& p = problem10();
    SystemState s = p.zero_state();
    CHECK(p.objective(s.u_a, s.u_c) == 0.0);

    // Unit strain on the first right overlap element only.
    s.u_c.right.tail(s.u_c.right.size() - 1).setConstant(1.0);
    CHECK(p.objective(s.u_a, s.u_c) == 0.5);

    // u_c equal to the atomistic interpolant on the overlap, arbitrary elsewhere.
    s = random_state(p);
    for (long x = 10; x <= 20; ++x) {
        s.u_c.right[x - 10] = s.u_a.at(x);
        s.u_c.left[x - 10] = s.u_a.at(-x);
    }
    CHECK(p.objective(s.u_a, s.u_c) < 1e-30);

    for (int trial = 0; trial < 20; ++trial) {
        s = random_state(p);
        double brute = 0.0;
        for (long x = 10; x < 20; ++x) {
            for (long sign : {1L, -1L}) {
                const long lo = sign > 0 ? x : -x - 1;
                const double d = (s.u_a.at(lo + 1) - s.u_a.at(lo)) - (uc_at(p, s.u_c, lo + 1) - uc_at(p, s.u_c, lo));
                brute += 0.5 * d * d;
            }
        }
        CHECK(p.objective(s.u_a, s.u_c) == doctest::Approx(brute).epsilon(1e-13));
    }
}

TEST_CASE("mean-zero constraints") {
    const auto& p = problem10();
    SystemState s = p.zero_state();
    s.u_a.values.setConstant(1.0);
    auto c = p.mean_zero_constraints(s.u_a, s.u_c);
    CHECK(c[0] == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(c[1] == doctest::Approx(10.0).epsilon(1e-15));

    for (int trial = 0; trial < 20; ++trial) {
        s = random_state(p);
        std::array<double, 2> trap{0.0, 0.0};
        for (long x = 10; x < 20; ++x) {
            auto diff = [&](long y) { return s.u_a.at(y) - uc_at(p, s.u_c, y); };
            trap[0] += 0.5 * (diff(x) + diff(x + 1));
            trap[1] += 0.5 * (diff(-x) + diff(-x - 1));
        }
        c = p.mean_zero_constraints(s.u_a, s.u_c);
        CHECK(c[0] == doctest::Approx(trap[0]).epsilon(1e-12).scale(1e-12));
        CHECK(c[1] == doctest::Approx(trap[1]).epsilon(1e-12).scale(1e-12));

        // Matching u_c to I u_a on the overlap zeroes both integrals.
        for (long x = 10; x <= 20; ++x) {
            s.u_c.right[x - 10] = s.u_a.at(x);
            s.u_c.left[x - 10] = s.u_a.at(-x);
        }
        c = p.mean_zero_constraints(s.u_a, s.u_c);
        CHECK(std::abs(c[0]) < 1e-15);
        CHECK(std::abs(c[1]) < 1e-15);
    }
}

TEST_CASE("Lagrangian gradient matches finite differences of Psi") {
    const auto& p = problem10();
    for (int trial = 0; trial < 20; ++trial) {
        const SystemState s = random_state(p);
        const Eigen::VectorXd z = p.pack(s);
        const auto g_fd = atc_test::fd_gradient([&](const Eigen::VectorXd& v) { return p.lagrangian(p.unpack(v)); }, z);
        const Eigen::VectorXd g = p.lagrangian_gradient(s);
        const auto& l = p.layout();
        // Block by block so a small block is not hidden behind a large one.
        for (auto [off, len] : {std::pair{Eigen::Index{0}, l.atomistic},
                                std::pair{l.continuum_offset(), l.continuum},
                                std::pair{l.adjoint_atomistic_offset(), l.adjoint_atomistic},
                                std::pair{l.adjoint_continuum_offset(), l.adjoint_continuum},
                                std::pair{l.multiplier_offset(), l.multipliers}}) {
            CAPTURE(off);
            CHECK(relative_error(g.segment(off, len), g_fd.segment(off, len)) < 1e-6);
        }
    }
}

TEST_CASE("adjoint blocks are the equilibrium residuals") {
    const auto& p = problem10();
    SystemState s = random_state(p);
    s.lambda_a.setZero();
    s.lambda_c.right.setZero();
    s.lambda_c.left.setZero();
    s.eta = {0.0, 0.0};
    const Eigen::VectorXd g = p.lagrangian_gradient(s);
    const auto& l = p.layout();
    CHECK(g.segment(l.adjoint_atomistic_offset(), l.adjoint_atomistic) == p.atomistic_residual(s.u_a));
    CHECK(g.segment(l.adjoint_continuum_offset(), l.adjoint_continuum) == p.continuum_residual(s.u_c));
    const auto c = p.mean_zero_constraints(s.u_a, s.u_c);
    CHECK(g[l.multiplier_offset()] == c[0]);
    CHECK(g[l.multiplier_offset() + 1] == c[1]);
}

TEST_CASE("Lagrangian Hessian") {
    const auto& p = problem10();
    const auto& l = p.layout();
    for (int trial = 0; trial < 20; ++trial) {
        const SystemState s = random_state(p);
        const KktSystem sys = p.lagrangian_hessian(s, HessianMode::full_newton);
        const Eigen::MatrixXd h(sys.hessian);
        CHECK((h - h.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * h.cwiseAbs().maxCoeff());

        // Everything below and right of the primal block that couples two dual unknowns is zero,
        // as are the adjoint couplings across subproblems.
        CHECK(h.bottomRightCorner(l.dual(), l.dual()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(h.block(l.adjoint_atomistic_offset(), l.continuum_offset(), l.adjoint_atomistic, l.continuum)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
        CHECK(h.block(l.adjoint_continuum_offset(), 0, l.adjoint_continuum, l.atomistic).cwiseAbs().maxCoeff() ==
              0.0);

        const Eigen::VectorXd z = p.pack(s);
        const Eigen::VectorXd v = atc_test::random_vector(z.size(), -1, 1);
        const double eps = 1e-6;
        const Eigen::VectorXd hv_fd =
            (p.lagrangian_gradient(p.unpack(z + eps * v)) - p.lagrangian_gradient(p.unpack(z - eps * v))) / (2 * eps);
        CHECK(relative_error(h * v, hv_fd) < 1e-5);
        CHECK(sys.gradient == p.lagrangian_gradient(s));
    }
}

TEST_CASE("Gauss-Newton and full Newton agree without adjoints") {
    const auto& p = problem10();
    SystemState s = random_state(p);
    s.lambda_a.setZero();
    s.lambda_c.right.setZero();
    s.lambda_c.left.setZero();
    const Eigen::MatrixXd full(p.lagrangian_hessian(s, HessianMode::full_newton).hessian);
    const Eigen::MatrixXd gauss(p.lagrangian_hessian(s, HessianMode::gauss_newton).hessian);
    CHECK((full - gauss).cwiseAbs().maxCoeff() == 0.0);

    s = random_state(p);
    const Eigen::MatrixXd full2(p.lagrangian_hessian(s, HessianMode::full_newton).hessian);
    const Eigen::MatrixXd gauss2(p.lagrangian_hessian(s, HessianMode::gauss_newton).hessian);
    CHECK((full2 - gauss2).cwiseAbs().maxCoeff() > 0.0);
}

double round_trip(const KktSystem& sys) {
    const Eigen::VectorXd e = atc_test::random_vector(sys.layout.size(), -1, 1);
    const auto sol = solve_kkt_linear(sys, sys.hessian * e);
    CHECK(sol.relative_residual < 1e-14);
    return (sol.x - e).norm() / e.norm();
}

TEST_CASE("KKT linear solve") {
    const auto& p = problem10();
    const KktSystem sys = p.lagrangian_hessian(random_state(p), HessianMode::full_newton);

    const auto zero = solve_kkt_linear(sys, Eigen::VectorXd::Zero(sys.layout.size()));
    CHECK(zero.x.cwiseAbs().maxCoeff() == 0.0);

    // Round trips on the smallest admissible problem, at the Newton start and at the solution.
    const auto small = CouplingProblem::manufactured(4, kGamma);
    const auto small_solution = newton_solve(small, small.zero_state()).state;
    for (const SystemState& s : {small.zero_state(), small_solution}) {
        const KktSystem k = small.lagrangian_hessian(s, HessianMode::full_newton);
        for (int trial = 0; trial < 20; ++trial) CHECK(round_trip(k) < 1e-8);
    }
    // Larger problems carry a far-field mode with singular value ~ (R_a - R_core) / R_c^2, so the
    // attainable forward error grows like eps * cond; at R_core = 10 cond is about 1e10.
    for (int trial = 0; trial < 10; ++trial) CHECK(round_trip(sys) < 1e-6);

    // [[I, B^T], [B, 0]] with B = (1 0): x1 + l = a, x2 = b, x1 = c.
    Eigen::MatrixXd toy(3, 3);
    toy << 1, 0, 1, 0, 1, 0, 1, 0, 0;
    const auto sol = solve_kkt_linear(SparseMatrix(toy.sparseView()), Eigen::Vector3d(2.0, -3.0, 0.5));
    CHECK(sol.x[0] == doctest::Approx(0.5));
    CHECK(sol.x[1] == doctest::Approx(-3.0));
    CHECK(sol.x[2] == doctest::Approx(1.5));

    Eigen::MatrixXd singular(3, 3);
    singular << 1, 0, 1, 0, 0, 0, 1, 0, 0;
    try {
        solve_kkt_linear(SparseMatrix(singular.sparseView()), Eigen::Vector3d(1.0, 1.0, 1.0));
        FAIL("singular matrix accepted");
    } catch (const SolverError& e) {
        CHECK(e.condition_estimate() > 1e12);
    }
    CHECK_THROWS_AS(solve_kkt_linear(sys, Eigen::VectorXd::Zero(3)), UsageError);
}

TEST_CASE("Newton solve from the zero state") {
    const auto& r = solved10();
    const auto& d = r.diagnostics;
    CHECK(d.converged);
    CHECK(d.final_residual < 1e-10);
    CHECK(d.iterations == 6);
    CHECK(d.worst_linear_residual() < 1e-10);
    CHECK(d.history.size() == static_cast<std::size_t>(d.iterations) + 1);

    // Quadratic convergence: r_{k+1} / r_k^2 stays bounded over the last steps.
    const auto& h = d.history;
    for (std::size_t k = h.size() - 3; k + 1 < h.size(); ++k) CHECK(h[k + 1].residual / (h[k].residual * h[k].residual) < 1e3);

    std::ostringstream csv;
    d.write_csv(csv);
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "iter,residual,step_length,objective");
    int rows = 0;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == static_cast<int>(h.size()));
}

TEST_CASE("converged solution is feasible") {
    const auto& p = problem10();
    const auto& s = solved10().state;
    CHECK(p.lagrangian_gradient(s).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(p.atomistic_residual(s.u_a).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(p.continuum_residual(s.u_c).cwiseAbs().maxCoeff() < 1e-10);
    const auto c = p.mean_zero_constraints(s.u_a, s.u_c);
    CHECK(std::abs(c[0]) < 1e-10);
    CHECK(std::abs(c[1]) < 1e-10);
    // lambda_c stays zero where it is not a degree of freedom.
    CHECK(s.lambda_c.right[0] == 0.0);
    CHECK(s.lambda_c.left[0] == 0.0);
}

TEST_CASE("Newton restart at a converged solution takes no steps") {
    const auto again = newton_solve(problem10(), solved10().state);
    CHECK(again.diagnostics.iterations == 0);
    CHECK(again.diagnostics.converged);
}

TEST_CASE("Gauss-Newton mode also converges") {
    NewtonOptions opts;
    opts.hessian_mode = HessianMode::gauss_newton;
    opts.max_iterations = 200;
    const auto r = newton_iterate(problem10(), problem10().zero_state(), opts);
    CHECK(r.diagnostics.converged);
    CHECK(r.diagnostics.final_residual < 1e-10);
}

TEST_CASE("non-convergence is reported") {
    NewtonOptions opts;
    opts.max_iterations = 1;
    const auto r = newton_iterate(problem10(), problem10().zero_state(), opts);
    CHECK_FALSE(r.diagnostics.converged);
    try {
        newton_solve(problem10(), problem10().zero_state(), opts);
        FAIL("expected NonConvergence");
    } catch (const NonConvergence& e) {
        CHECK(e.residual_history().size() == 2);
        CHECK(e.residual_history()[1] < e.residual_history()[0]);
    }
    opts.damping = 1.5;
    CHECK_THROWS_AS(newton_iterate(problem10(), problem10().zero_state(), opts), UsageError);
}

TEST_CASE("assembled composite solution") {
    const auto& p = problem10();
    const auto& s = solved10().state;
    const auto u = assemble_atc_solution(p, s);
    CHECK(u.range() == p.decomposition().lattice_full());
    for (long xi = -20; xi <= 20; ++xi) CHECK(u.at(xi) == s.u_a.at(xi));
    CHECK(u.at(1789) == 0.0);
    CHECK(u.at(-1789) == 0.0);

    // Independent piecewise-linear interpolation over the right-half mesh.
    const auto nodes = p.mesh().right_half(10);
    for (int trial = 0; trial < 200; ++trial) {
        const long x = 21 + static_cast<long>(uniform(0, 1767));
        for (long sign : {1L, -1L}) {
            const Eigen::VectorXd& vals = sign > 0 ? s.u_c.right : s.u_c.left;
            std::size_t e = 0;
            while (nodes[e + 1] <= x) ++e;
            const double u0 = vals[static_cast<Eigen::Index>(e)];
            const double u1 = nodes[e + 1] == 1789 ? 0.0 : vals[static_cast<Eigen::Index>(e) + 1];
            const double t = static_cast<double>(x - nodes[e]) / static_cast<double>(nodes[e + 1] - nodes[e]);
            CHECK(u.at(sign * x) == doctest::Approx(u0 + t * (u1 - u0)).epsilon(1e-14).scale(1e-16));
            CHECK(continuum_value_at(p, s.u_c, sign * x) == doctest::Approx(u.at(sign * x)).epsilon(1e-14).scale(1e-16));
        }
    }
}
