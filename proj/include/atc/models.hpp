#pragma once

#include <map>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "atc/domain_mesh.hpp"
#include "atc/lattice_potential.hpp"

namespace atc {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Values on the consecutive lattice sites [first, first + size), zero outside.
template <class Tag>
struct SiteField {
    long first = 0;
    Eigen::VectorXd values;

    SiteField() = default;
    SiteField(long first_site, Eigen::VectorXd v) : first(first_site), values(std::move(v)) {}
    static SiteField zeros(IndexRange range) { return SiteField(range.first, Eigen::VectorXd::Zero(range.size())); }

    IndexRange range() const noexcept { return {first, first + static_cast<long>(values.size()) - 1}; }
    double at(long xi) const noexcept {
        const long i = xi - first;
        return (i >= 0 && i < values.size()) ? values[i] : 0.0;
    }
    double& operator[](long xi) { return values[xi - first]; }
};

struct AtomisticTag {};
struct ForceTag {};
struct LatticeTag {};

/// Displacement on every site of L_a; sites outside the double interior are virtual controls.
using AtomisticState = SiteField<AtomisticTag>;
/// External force per lattice site.
using ExternalForce = SiteField<ForceTag>;
/// Displacement on a set of lattice sites, zero-extended.
using LatticeDisplacement = SiteField<LatticeTag>;

/// Nodal displacement of the two continuum half-domains. Node k of a half-domain sits at
/// sign * nodes[k]; the outer node (|x| = R_c) carries u = 0 and is not stored.
struct ContinuumState {
    Eigen::VectorXd right;
    Eigen::VectorXd left;
};

/// 0.1 (1 + xi^2)^(-gamma/2) xi
double exact_solution(double xi, double gamma);

/// Continuum half-domain [R_core, R_c] (sign = +1) or its mirror (sign = -1).
struct HalfDomain {
    std::vector<long> nodes;  // ascending |x|, nodes.front() = R_core, nodes.back() = R_c
    int sign = 1;

    std::size_t unknowns() const noexcept { return nodes.size() - 1; }
    std::size_t elements() const noexcept { return nodes.size() - 1; }
    double element_size(std::size_t e) const { return static_cast<double>(nodes[e + 1] - nodes[e]); }
    /// d(grad u|_T)/du_k for the two nodes of element e, in physical orientation.
    double gradient_weight(std::size_t e) const { return sign / element_size(e); }
};

/// Atomistic subproblem on L_a: sum of site energies over the sites whose stencil lies in
/// L_a, minus the work of the external force on the double interior.
class AtomisticModel {
public:
    AtomisticModel(const DomainDecomposition& dec, ExternalForce force);
    AtomisticModel(const DomainDecomposition& dec, ExternalForce force, SitePotential site);
    /// Explicit site sets: energy_sites' stencils must lie in sites; test_sites inside energy_sites.
    AtomisticModel(IndexRange sites, IndexRange energy_sites, IndexRange test_sites, ExternalForce force,
                   SitePotential site);

    /// Per-site potential (impurity hook). Sites without an override use the homogeneous one.
    void set_site_potential(long xi, SitePotential site);

    IndexRange sites() const noexcept { return sites_; }
    IndexRange energy_sites() const noexcept { return energy_sites_; }
    IndexRange test_sites() const noexcept { return test_sites_; }
    const ExternalForce& force() const noexcept { return force_; }

    double energy(const Eigen::VectorXd& u) const;
    /// Derivative with respect to every value on L_a.
    Eigen::VectorXd gradient(const Eigen::VectorXd& u) const;
    SparseMatrix hessian(const Eigen::VectorXd& u) const;
    /// sum_k d^3E/(du_i du_j du_k) w_k, with w indexed like u.
    SparseMatrix third_contracted(const Eigen::VectorXd& u, const Eigen::VectorXd& w) const;

private:
    const SitePotential& potential_at(long xi) const;
    std::vector<double> stencil_at(const Eigen::VectorXd& u, long xi) const;
    template <class Visitor>
    void for_each_site(Visitor&& visit) const;

    IndexRange sites_;
    IndexRange energy_sites_;
    IndexRange test_sites_;
    ExternalForce force_;
    std::shared_ptr<const SitePotential> site_;
    std::map<long, SitePotential> overrides_;
    std::vector<int> range_;
};

/// Cauchy-Born P1 finite-element energy on the two continuum half-domains with the exact
/// work of the piecewise-linear force interpolant.
class ContinuumModel {
public:
    ContinuumModel(const DomainDecomposition& dec, const GradedMesh& mesh, const ExternalForce& force);
    /// Explicit half-domain nodes (ascending |x|, first node = core radius, last = outer radius).
    ContinuumModel(std::vector<long> half_nodes, const ExternalForce& force, CauchyBorn density);

    const HalfDomain& right() const noexcept { return right_; }
    const HalfDomain& left() const noexcept { return left_; }
    /// Unknowns per half-domain (nodes except the outer one).
    std::size_t half_size() const noexcept { return right_.unknowns(); }
    std::size_t size() const noexcept { return 2 * half_size(); }
    const Eigen::VectorXd& load() const noexcept { return load_; }

    ContinuumState split(const Eigen::VectorXd& u) const;
    Eigen::VectorXd join(const ContinuumState& u) const;

    /// Element gradient on element e of the given half-domain.
    double element_gradient(const HalfDomain& half, const Eigen::VectorXd& u_half, std::size_t e) const;

    double energy(const Eigen::VectorXd& u) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& u) const;
    SparseMatrix hessian(const Eigen::VectorXd& u) const;
    SparseMatrix third_contracted(const Eigen::VectorXd& u, const Eigen::VectorXd& w) const;

private:
    void build_load(const ExternalForce& force);
    template <class Visitor>
    void for_each_element(const Eigen::VectorXd& u, Visitor&& visit) const;

    HalfDomain right_;
    HalfDomain left_;
    CauchyBorn density_;
    Eigen::VectorXd load_;  // [right | left], int (If) phi_j dx
};

/// Load that makes the exact solution an equilibrium of E(u) - sum f u: f(xi) = dE/du_xi at the
/// exact solution, E being the force-free infinite-lattice energy.
ExternalForce manufacture_forces(double gamma, const DomainDecomposition& dec);
ExternalForce manufacture_forces(double gamma, IndexRange sites, const SitePotential& site);

// Convenience wrappers with the default site potential.
double atomistic_energy(const AtomisticState& u, const ExternalForce& f, const DomainDecomposition& dec);
Eigen::VectorXd atomistic_grad(const AtomisticState& u, const ExternalForce& f, const DomainDecomposition& dec);
double continuum_energy(const ContinuumState& u, const ExternalForce& f, const DomainDecomposition& dec,
                        const GradedMesh& mesh);

}  // namespace atc
