#include "atc/models.hpp"

#include <cmath>

#include "atc/errors.hpp"

namespace atc {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Local dofs of a site: index 0 is the site itself, index j+1 the neighbour at offset range[j].
// D_rho u = u(xi + rho) - u(xi), so a stencil tensor maps to local dofs through P = [-1 | I].
Eigen::MatrixXd lift_to_local(const Eigen::MatrixXd& stencil_matrix) {
    const auto n = stencil_matrix.rows();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n + 1);
    p.col(0).setConstant(-1.0);
    p.rightCols(n).setIdentity();
    return p.transpose() * stencil_matrix * p;
}

Eigen::VectorXd lift_to_local(const Eigen::VectorXd& stencil_vector) {
    const auto n = stencil_vector.size();
    Eigen::VectorXd out(n + 1);
    out[0] = -stencil_vector.sum();
    out.tail(n) = stencil_vector;
    return out;
}

SparseMatrix from_triplets(Eigen::Index n, const Triplets& triplets) {
    SparseMatrix m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

double product_integral(double p0, double p1, double q0, double q1) {
    // int_0^1 (p0 (1-t) + p1 t)(q0 (1-t) + q1 t) dt
    return (2.0 * p0 * q0 + p0 * q1 + p1 * q0 + 2.0 * p1 * q1) / 6.0;
}

}  // namespace

double exact_solution(double xi, double gamma) { return 0.1 * std::pow(1.0 + xi * xi, -0.5 * gamma) * xi; }

// ---------------------------------------------------------------------------------------------
// Atomistic model

AtomisticModel::AtomisticModel(const DomainDecomposition& dec, ExternalForce force)
    : AtomisticModel(dec, std::move(force), SitePotential::lennard_jones_nnn(dec.model())) {}

AtomisticModel::AtomisticModel(const DomainDecomposition& dec, ExternalForce force, SitePotential site)
    : AtomisticModel(dec.lattice_atomistic(), dec.atomistic_interior(), dec.atomistic_double_interior(),
                     std::move(force), std::move(site)) {}

AtomisticModel::AtomisticModel(IndexRange sites, IndexRange energy_sites, IndexRange test_sites, ExternalForce force,
                               SitePotential site)
    : sites_(sites),
      energy_sites_(energy_sites),
      test_sites_(test_sites),
      force_(std::move(force)),
      site_(std::make_shared<const SitePotential>(std::move(site))),
      range_(site_->model().interaction_range()) {
    const long reach = site_->model().reach();
    if (energy_sites_.first - reach < sites_.first || energy_sites_.last + reach > sites_.last)
        throw UsageError("energy sites need their whole stencil inside the site range");
    if (test_sites_.first < energy_sites_.first || test_sites_.last > energy_sites_.last)
        throw UsageError("test sites must lie inside the energy sites");
}

void AtomisticModel::set_site_potential(long xi, SitePotential site) {
    if (site.model().interaction_range() != range_) throw UsageError("site potential uses a different interaction range");
    overrides_.insert_or_assign(xi, std::move(site));
}

const SitePotential& AtomisticModel::potential_at(long xi) const {
    if (overrides_.empty()) return *site_;
    const auto it = overrides_.find(xi);
    return it == overrides_.end() ? *site_ : it->second;
}

std::vector<double> AtomisticModel::stencil_at(const Eigen::VectorXd& u, long xi) const {
    std::vector<double> d(range_.size());
    const long i = xi - sites_.first;
    for (std::size_t j = 0; j < range_.size(); ++j) d[j] = u[i + range_[j]] - u[i];
    return d;
}

template <class Visitor>
void AtomisticModel::for_each_site(Visitor&& visit) const {
    std::vector<Eigen::Index> dofs(range_.size() + 1);
    for (long xi = energy_sites_.first; xi <= energy_sites_.last; ++xi) {
        const long i = xi - sites_.first;
        dofs[0] = i;
        for (std::size_t j = 0; j < range_.size(); ++j) dofs[j + 1] = i + range_[j];
        visit(xi, dofs);
    }
}

double AtomisticModel::energy(const Eigen::VectorXd& u) const {
    if (u.size() != sites_.size()) throw UsageError("atomistic state has the wrong size");
    double e = 0.0;
    for_each_site([&](long xi, const auto&) { e += potential_at(xi).value(stencil_at(u, xi)); });
    for (long xi = test_sites_.first; xi <= test_sites_.last; ++xi) e -= force_.at(xi) * u[xi - sites_.first];
    return e;
}

Eigen::VectorXd AtomisticModel::gradient(const Eigen::VectorXd& u) const {
    if (u.size() != sites_.size()) throw UsageError("atomistic state has the wrong size");
    Eigen::VectorXd g = Eigen::VectorXd::Zero(u.size());
    for_each_site([&](long xi, const auto& dofs) {
        const Eigen::VectorXd local = lift_to_local(potential_at(xi).gradient(stencil_at(u, xi)));
        for (std::size_t a = 0; a < dofs.size(); ++a) g[dofs[a]] += local[static_cast<Eigen::Index>(a)];
    });
    for (long xi = test_sites_.first; xi <= test_sites_.last; ++xi) g[xi - sites_.first] -= force_.at(xi);
    return g;
}

SparseMatrix AtomisticModel::hessian(const Eigen::VectorXd& u) const {
    if (u.size() != sites_.size()) throw UsageError("atomistic state has the wrong size");
    Triplets t;
    for_each_site([&](long xi, const auto& dofs) {
        const Eigen::MatrixXd local = lift_to_local(potential_at(xi).hessian(stencil_at(u, xi)));
        for (std::size_t a = 0; a < dofs.size(); ++a)
            for (std::size_t b = 0; b < dofs.size(); ++b)
                t.emplace_back(dofs[a], dofs[b], local(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
    });
    return from_triplets(u.size(), t);
}

SparseMatrix AtomisticModel::third_contracted(const Eigen::VectorXd& u, const Eigen::VectorXd& w) const {
    if (u.size() != sites_.size() || w.size() != sites_.size())
        throw UsageError("atomistic state has the wrong size");
    Triplets t;
    Eigen::VectorXd dw(static_cast<Eigen::Index>(range_.size()));
    for_each_site([&](long xi, const auto& dofs) {
        for (std::size_t j = 0; j < range_.size(); ++j)
            dw[static_cast<Eigen::Index>(j)] = w[dofs[j + 1]] - w[dofs[0]];
        if (dw.isZero(0.0)) return;
        const Eigen::MatrixXd local = lift_to_local(potential_at(xi).third_contracted(stencil_at(u, xi), dw));
        for (std::size_t a = 0; a < dofs.size(); ++a)
            for (std::size_t b = 0; b < dofs.size(); ++b)
                t.emplace_back(dofs[a], dofs[b], local(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
    });
    return from_triplets(u.size(), t);
}

// ---------------------------------------------------------------------------------------------
// Continuum model

ContinuumModel::ContinuumModel(const DomainDecomposition& dec, const GradedMesh& mesh, const ExternalForce& force)
    : ContinuumModel(mesh.right_half(dec.r_core()), force, CauchyBorn(SitePotential::lennard_jones_nnn(dec.model()))) {
    if (right_.nodes.front() != dec.r_core() || right_.nodes.back() != dec.r_c())
        throw UsageError("mesh does not span the continuum domain [R_core, R_c]");
    for (long x = dec.r_core(); x <= dec.r_a(); ++x)
        if (right_.nodes[static_cast<std::size_t>(x - dec.r_core())] != x)
            throw UsageError("mesh is not fully refined on the overlap");
}

ContinuumModel::ContinuumModel(std::vector<long> half_nodes, const ExternalForce& force, CauchyBorn density)
    : density_(std::move(density)) {
    if (half_nodes.size() < 2) throw UsageError("a continuum half-domain needs at least one element");
    for (std::size_t i = 1; i < half_nodes.size(); ++i)
        if (half_nodes[i] <= half_nodes[i - 1]) throw UsageError("half-domain nodes must be strictly increasing");
    if (half_nodes.front() <= 0) throw UsageError("half-domain must start at a positive radius");
    right_ = HalfDomain{half_nodes, +1};
    left_ = HalfDomain{std::move(half_nodes), -1};
    build_load(force);
}

void ContinuumModel::build_load(const ExternalForce& force) {
    load_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
    const auto n = static_cast<Eigen::Index>(half_size());
    for (const HalfDomain* half : {&right_, &left_}) {
        const Eigen::Index offset = half->sign > 0 ? 0 : n;
        for (std::size_t e = 0; e < half->elements(); ++e) {
            const long a = half->nodes[e];
            const long b = half->nodes[e + 1];
            const double h = static_cast<double>(b - a);
            double to_a = 0.0;
            double to_b = 0.0;
            for (long m = a; m < b; ++m) {
                const double f0 = force.at(half->sign * m);
                const double f1 = force.at(half->sign * (m + 1));
                if (f0 == 0.0 && f1 == 0.0) continue;
                to_a += product_integral(f0, f1, (b - m) / h, (b - m - 1) / h);
                to_b += product_integral(f0, f1, (m - a) / h, (m + 1 - a) / h);
            }
            load_[offset + static_cast<Eigen::Index>(e)] += to_a;
            if (e + 1 < half->unknowns()) load_[offset + static_cast<Eigen::Index>(e) + 1] += to_b;
        }
    }
}

ContinuumState ContinuumModel::split(const Eigen::VectorXd& u) const {
    if (u.size() != static_cast<Eigen::Index>(size())) throw UsageError("continuum state has the wrong size");
    const auto n = static_cast<Eigen::Index>(half_size());
    return {u.head(n), u.tail(n)};
}

Eigen::VectorXd ContinuumModel::join(const ContinuumState& u) const {
    const auto n = static_cast<Eigen::Index>(half_size());
    if (u.right.size() != n || u.left.size() != n) throw UsageError("continuum state has the wrong size");
    Eigen::VectorXd out(2 * n);
    out << u.right, u.left;
    return out;
}

double ContinuumModel::element_gradient(const HalfDomain& half, const Eigen::VectorXd& u_half, std::size_t e) const {
    const double u0 = u_half[static_cast<Eigen::Index>(e)];
    const double u1 = e + 1 < half.unknowns() ? u_half[static_cast<Eigen::Index>(e) + 1] : 0.0;
    return half.sign * (u1 - u0) / half.element_size(e);
}

// visit(h, gradient, weight, dof0, dof1) with dof1 = -1 at the outer boundary.
template <class Visitor>
void ContinuumModel::for_each_element(const Eigen::VectorXd& u, Visitor&& visit) const {
    if (u.size() != static_cast<Eigen::Index>(size())) throw UsageError("continuum state has the wrong size");
    const auto n = static_cast<Eigen::Index>(half_size());
    for (const HalfDomain* half : {&right_, &left_}) {
        const Eigen::Index offset = half->sign > 0 ? 0 : n;
        const Eigen::VectorXd u_half = u.segment(offset, n);
        for (std::size_t e = 0; e < half->elements(); ++e) {
            const Eigen::Index dof0 = offset + static_cast<Eigen::Index>(e);
            const Eigen::Index dof1 = e + 1 < half->unknowns() ? dof0 + 1 : -1;
            visit(half->element_size(e), element_gradient(*half, u_half, e), half->gradient_weight(e), dof0, dof1);
        }
    }
}

double ContinuumModel::energy(const Eigen::VectorXd& u) const {
    double e = 0.0;
    for_each_element(u, [&](double h, double grad, double, Eigen::Index, Eigen::Index) {
        e += h * density_.value(grad);
    });
    return e - load_.dot(u);
}

Eigen::VectorXd ContinuumModel::gradient(const Eigen::VectorXd& u) const {
    Eigen::VectorXd g = -load_;
    for_each_element(u, [&](double h, double grad, double weight, Eigen::Index dof0, Eigen::Index dof1) {
        const double s = h * density_.d1(grad) * weight;
        g[dof0] -= s;
        if (dof1 >= 0) g[dof1] += s;
    });
    return g;
}

SparseMatrix ContinuumModel::hessian(const Eigen::VectorXd& u) const {
    Triplets t;
    for_each_element(u, [&](double h, double grad, double weight, Eigen::Index dof0, Eigen::Index dof1) {
        const double k = h * density_.d2(grad) * weight * weight;
        t.emplace_back(dof0, dof0, k);
        if (dof1 >= 0) {
            t.emplace_back(dof1, dof1, k);
            t.emplace_back(dof0, dof1, -k);
            t.emplace_back(dof1, dof0, -k);
        }
    });
    return from_triplets(u.size(), t);
}

SparseMatrix ContinuumModel::third_contracted(const Eigen::VectorXd& u, const Eigen::VectorXd& w) const {
    if (w.size() != u.size()) throw UsageError("adjoint vector has the wrong size");
    Triplets t;
    for_each_element(u, [&](double h, double grad, double weight, Eigen::Index dof0, Eigen::Index dof1) {
        const double w0 = w[dof0];
        const double w1 = dof1 >= 0 ? w[dof1] : 0.0;
        const double dw = weight * (w1 - w0);
        if (dw == 0.0) return;
        const double k = h * density_.d3(grad) * dw * weight * weight;
        t.emplace_back(dof0, dof0, k);
        if (dof1 >= 0) {
            t.emplace_back(dof1, dof1, k);
            t.emplace_back(dof0, dof1, -k);
            t.emplace_back(dof1, dof0, -k);
        }
    });
    return from_triplets(u.size(), t);
}

// ---------------------------------------------------------------------------------------------
// Manufactured problem

ExternalForce manufacture_forces(double gamma, IndexRange sites, const SitePotential& site) {
    const auto& range = site.model().interaction_range();
    const auto n = range.size();
    const long reach = site.model().reach();

    // Closed form on every site any owner stencil can touch.
    const long lo = sites.first - 2 * reach;
    std::vector<double> exact(static_cast<std::size_t>(sites.size() + 4 * reach));
    for (std::size_t i = 0; i < exact.size(); ++i) exact[i] = exact_solution(static_cast<double>(lo + static_cast<long>(i)), gamma);
    const auto u = [&](long xi) { return exact[static_cast<std::size_t>(xi - lo)]; };

    // Stencil gradient of every site energy that depends on a site in range.
    const long owner_lo = sites.first - reach;
    const long owners = sites.size() + 2 * reach;
    Eigen::MatrixXd grads(static_cast<Eigen::Index>(n), owners);
    std::vector<double> stencil(n);
    for (long k = 0; k < owners; ++k) {
        const long owner = owner_lo + k;
        for (std::size_t j = 0; j < n; ++j) stencil[j] = u(owner + range[j]) - u(owner);
        grads.col(k) = site.gradient(stencil);
    }

    ExternalForce f = ExternalForce::zeros(sites);
    for (long xi = sites.first; xi <= sites.last; ++xi) {
        // dE/du(xi) collects the site itself and every owner xi - rho.
        double dE = -grads.col(xi - owner_lo).sum();
        for (std::size_t j = 0; j < n; ++j)
            dE += grads(static_cast<Eigen::Index>(j), xi - range[j] - owner_lo);
        f[xi] = dE;
    }
    return f;
}

ExternalForce manufacture_forces(double gamma, const DomainDecomposition& dec) {
    return manufacture_forces(gamma, dec.lattice_full(), SitePotential::lennard_jones_nnn(dec.model()));
}

double atomistic_energy(const AtomisticState& u, const ExternalForce& f, const DomainDecomposition& dec) {
    if (u.range() != dec.lattice_atomistic()) throw UsageError("atomistic state is not indexed by L_a");
    return AtomisticModel(dec, f).energy(u.values);
}

Eigen::VectorXd atomistic_grad(const AtomisticState& u, const ExternalForce& f, const DomainDecomposition& dec) {
    if (u.range() != dec.lattice_atomistic()) throw UsageError("atomistic state is not indexed by L_a");
    return AtomisticModel(dec, f).gradient(u.values);
}

double continuum_energy(const ContinuumState& u, const ExternalForce& f, const DomainDecomposition& dec,
                        const GradedMesh& mesh) {
    const ContinuumModel model(dec, mesh, f);
    return model.energy(model.join(u));
}

}  // namespace atc
