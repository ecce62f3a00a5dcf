#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "atc/errors.hpp"
#include "atc/lattice_potential.hpp"
#include "atc/models.hpp"
#include "test_support.hpp"

using namespace atc;
using atc_test::central_difference;
using atc_test::relative_error;
using atc_test::uniform;

namespace {

// Direct scalar formula, deliberately not going through SitePotential.
double lj(double r) { return std::pow(r, -12) - 2.0 * std::pow(r, -6); }

std::vector<double> uniform_strain_stencil(const LatticeModel& model, double g) {
    std::vector<double> s;
    for (int rho : model.interaction_range()) s.push_back(g * rho);
    return s;
}

std::vector<double> random_stencil(std::size_t n, double amplitude) {
    std::vector<double> s(n);
    for (auto& v : s) v = uniform(-amplitude, amplitude);
    return s;
}

}  // namespace

TEST_CASE("phi closed-form values") {
    CHECK(phi(1.0) == -1.0);
    CHECK(phi(2.0) == -0.031005859375);
    CHECK(std::abs(phi_d1(1.0)) < 1e-14);
    CHECK(phi_d2(1.0) == doctest::Approx(72.0).epsilon(1e-14));
}

TEST_CASE("phi rejects non-positive and non-finite distances") {
    CHECK_THROWS_AS(phi(0.0), DomainError);
    CHECK_THROWS_AS(phi(-1.0), DomainError);
    CHECK_THROWS_AS(phi_d1(-0.5), DomainError);
    CHECK_THROWS_AS(phi_d3(0.0), DomainError);
    CHECK_THROWS_AS(phi(std::numeric_limits<double>::quiet_NaN()), DomainError);
    CHECK_THROWS_AS(phi(std::numeric_limits<double>::infinity()), DomainError);
}

TEST_CASE("scaled pair potential keeps its minimum at the equilibrium distance") {
    for (double r0 : {0.8, 1.0, 1.12246, 2.5}) {
        PairPotential p(3.0, r0);
        CHECK(std::abs(p.d1(r0)) < 1e-14 * p.d2(r0));
        CHECK(p.value(r0) == doctest::Approx(-3.0).epsilon(1e-14));
    }
}

TEST_CASE("pair potential derivatives match finite differences at random distances") {
    const PairPotential p;
    for (int trial = 0; trial < 100; ++trial) {
        const double r = uniform(0.8, 2.5);
        const double h = 1e-6 * r;
        CHECK(relative_error(p.d1(r), central_difference([&](double x) { return p.value(x); }, r, h)) < 1e-6);
        CHECK(relative_error(p.d2(r), central_difference([&](double x) { return p.d1(x); }, r, h)) < 1e-6);
        CHECK(relative_error(p.d3(r), central_difference([&](double x) { return p.d2(x); }, r, h)) < 1e-6);
        CHECK(p.value(r) == doctest::Approx(lj(r)).epsilon(1e-13));
    }
}

TEST_CASE("pair potential is finite down to the solver floor") {
    for (double r = 0.5; r < 10.0; r += 0.01) {
        CHECK(std::isfinite(phi(r)));
        CHECK(std::isfinite(phi_d1(r)));
        CHECK(std::isfinite(phi_d2(r)));
        CHECK(std::isfinite(phi_d3(r)));
    }
}

TEST_CASE("reference interaction range") {
    LatticeModel model;
    CHECK(model.interaction_range() == std::vector<int>{-2, -1, 1, 2});
    CHECK(model.reach() == 2);
    CHECK(model.index_of(-2) == 0);
    CHECK(model.index_of(2) == 3);
    CHECK_THROWS_AS(model.index_of(0), UsageError);
    CHECK_THROWS_AS(model.index_of(3), UsageError);
    CHECK_THROWS_AS(LatticeModel(2), UsageError);
}

TEST_CASE("interaction range is symmetric and respects the cutoff") {
    for (int trial = 0; trial < 50; ++trial) {
        const double F = uniform(0.5, 2.0);
        const double r_cut = uniform(0.6, 6.0);
        LatticeModel model(1, F, r_cut);
        const auto& range = model.interaction_range();
        for (int rho : range) {
            CHECK(rho != 0);
            CHECK(std::abs(F * rho) <= r_cut);
            CHECK(std::find(range.begin(), range.end(), -rho) != range.end());
        }
        // Maximal: the next neighbour out is beyond the cutoff.
        CHECK(std::abs(F * (model.reach() + 1)) > r_cut);
    }
}

TEST_CASE("stencil is keyed by the interaction range") {
    LatticeModel model;
    FiniteDifferenceStencil s(model);
    CHECK(s.values().size() == 4);
    s.set(-1, 0.25);
    CHECK(s.at(-1) == 0.25);
    CHECK(s.at(1) == 0.0);
    CHECK_THROWS_AS(s.at(3), UsageError);
    const std::vector<double> wrong(3, 0.0);
    CHECK_THROWS_AS(FiniteDifferenceStencil(model, wrong), UsageError);
}

TEST_CASE("site energy vanishes at the reference configuration") {
    LatticeModel model;
    CHECK(site_energy(FiniteDifferenceStencil(model), model) == 0.0);
    CHECK(cauchy_born_W(0.0) == 0.0);
}

TEST_CASE("site energy at the closed-form stencil around the origin") {
    // D_1 u = u(1) - u(0), D_-1 u = u(-1) - u(0) for the decaying test solution, gamma = 1.5.
    LatticeModel model;
    FiniteDifferenceStencil s(model);
    for (int rho : model.interaction_range()) s.set(rho, exact_solution(rho, 1.5) - exact_solution(0, 1.5));
    CHECK(s.at(1) == doctest::Approx(0.0594603557501361).epsilon(1e-13));
    // 40-digit evaluation of phi(1 + d) + phi(2 + 2d) - phi(1) - phi(2).
    CHECK(std::abs(site_energy(s, model) - 0.09481051732410590888) < 1e-14);
}

TEST_CASE("Cauchy-Born density values") {
    CHECK(std::abs(cauchy_born_W(0.01) - 0.00514236293855828292) < 1e-15);
    CHECK(cauchy_born_W(0.01) == doctest::Approx(lj(1.01) + lj(2.02) - lj(1.0) - lj(2.0)).epsilon(1e-12));
    // phi'(1) = 0 so only the second-neighbour bond contributes: 2 phi'(2).
    CHECK(cauchy_born_W_d1(0.0) == doctest::Approx(0.1845703125).epsilon(1e-14));
    CHECK(relative_error(central_difference(cauchy_born_W, 0.0), cauchy_born_W_d1(0.0)) < 1e-8);
}

TEST_CASE("Cauchy-Born consistency under uniform strain") {
    LatticeModel model;
    for (int trial = 0; trial < 200; ++trial) {
        const double g = uniform(-0.05, 0.05);
        const auto s = uniform_strain_stencil(model, g);
        CHECK(std::abs(site_energy(FiniteDifferenceStencil(model, s), model) - cauchy_born_W(g)) <= 1e-14);
    }
}

TEST_CASE("Cauchy-Born derivatives match finite differences") {
    for (int trial = 0; trial < 100; ++trial) {
        const double g = uniform(-0.2, 0.3);
        CHECK(relative_error(cauchy_born_W_d1(g), central_difference(cauchy_born_W, g)) < 1e-6);
        CHECK(relative_error(cauchy_born_W_d2(g), central_difference(cauchy_born_W_d1, g)) < 1e-6);
        CHECK(relative_error(cauchy_born_W_d3(g), central_difference(cauchy_born_W_d2, g)) < 1e-6);
    }
}

TEST_CASE("site energy derivatives match finite differences") {
    LatticeModel model;
    const auto site = SitePotential::lennard_jones_nnn(model);
    const auto n = static_cast<Eigen::Index>(model.interaction_range().size());
    for (int trial = 0; trial < 100; ++trial) {
        const auto s0 = random_stencil(n, 0.1);
        const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(s0.data(), n);
        auto as_span = [](const Eigen::VectorXd& v) { return std::span<const double>(v.data(), v.size()); };

        const auto g_fd = atc_test::fd_gradient([&](const Eigen::VectorXd& v) { return site.value(as_span(v)); }, x);
        CHECK(relative_error(site.gradient(s0), g_fd) < 1e-6);

        const auto h_fd = atc_test::fd_jacobian([&](const Eigen::VectorXd& v) { return site.gradient(as_span(v)); }, x);
        const Eigen::MatrixXd hess = site.hessian(s0);
        CHECK(relative_error(hess, h_fd) < 1e-6);
        CHECK((hess - hess.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * hess.cwiseAbs().maxCoeff());

        const auto t = site.third(s0);
        const Eigen::VectorXd w = atc_test::random_vector(n, -1.0, 1.0);
        const auto hw_fd = atc_test::fd_jacobian(
            [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return site.hessian(as_span(v)) * w; }, x);
        CHECK(relative_error(t.contract(w), hw_fd) < 1e-6);
        CHECK(relative_error(site.third_contracted(s0, w), t.contract(w)) < 1e-13);

        // Free-function wrappers agree with the homogeneous site potential.
        FiniteDifferenceStencil fs(model, s0);
        CHECK(site_energy(fs, model) == site.value(s0));
        CHECK(site_energy_grad(fs, model) == site.gradient(s0));
        CHECK(site_energy_hess(fs, model) == hess);
        CHECK(site_energy_d3(fs, model).contract(w) == t.contract(w));
    }
}

TEST_CASE("third-derivative tensor is fully symmetric") {
    LatticeModel model;
    const auto site = SitePotential::lennard_jones_nnn(model);
    const auto t = site.third(random_stencil(4, 0.1));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t k = 0; k < 4; ++k) {
                CHECK(t(i, j, k) == doctest::Approx(t(j, i, k)).epsilon(1e-12));
                CHECK(t(i, j, k) == doctest::Approx(t(k, j, i)).epsilon(1e-12));
            }
}

TEST_CASE("collapsed bonds are rejected") {
    LatticeModel model;
    FiniteDifferenceStencil s(model);
    s.set(1, -0.6);  // nearest-neighbour bond of length 0.4
    CHECK_THROWS_AS(site_energy(s, model), ConfigurationError);
    CHECK_THROWS_AS(cauchy_born_W(-0.6), ConfigurationError);
}

TEST_CASE("nearest/next-nearest site potential needs the reference range") {
    CHECK_THROWS_AS(SitePotential::lennard_jones_nnn(LatticeModel(1, 1.0, 1.0)), UsageError);
}
