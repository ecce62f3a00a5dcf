#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace atc {

/// Lennard-Jones pair interaction phi(r) = eps * ((r0/r)^12 - 2 (r0/r)^6).
/// The minimum is -eps at r = r0.
class PairPotential {
public:
    explicit PairPotential(double well_depth = 1.0, double equilibrium_distance = 1.0);

    double value(double r) const;
    double d1(double r) const;
    double d2(double r) const;
    double d3(double r) const;

    double well_depth() const noexcept { return well_depth_; }
    double equilibrium_distance() const noexcept { return equilibrium_distance_; }

private:
    double well_depth_;
    double equilibrium_distance_;
};

// Normalized potential (eps = r0 = 1). Throw DomainError for r <= 0 or non-finite r.
double phi(double r);
double phi_d1(double r);
double phi_d2(double r);
double phi_d3(double r);

/// Reference lattice Z^d deformed by F, with the interaction range
/// {rho != 0 : |F rho| <= r_cut}. Only d = 1 is implemented.
class LatticeModel {
public:
    explicit LatticeModel(int dimension = 1, double strain = 1.0, double r_cut = 2.0);

    int dimension() const noexcept { return dimension_; }
    double strain() const noexcept { return strain_; }
    double r_cut() const noexcept { return r_cut_; }
    /// Sorted ascending; symmetric about zero.
    const std::vector<int>& interaction_range() const noexcept { return range_; }
    /// Largest |rho| in the interaction range.
    int reach() const noexcept { return range_.empty() ? 0 : range_.back(); }
    /// Position of rho inside interaction_range(); throws UsageError if absent.
    std::size_t index_of(int rho) const;

private:
    int dimension_;
    double strain_;
    double r_cut_;
    std::vector<int> range_;
};

/// Finite differences D_rho u(xi) for every rho in the interaction range.
class FiniteDifferenceStencil {
public:
    explicit FiniteDifferenceStencil(const LatticeModel& model);
    FiniteDifferenceStencil(const LatticeModel& model, std::span<const double> values);

    double at(int rho) const { return values_[model_.index_of(rho)]; }
    void set(int rho, double value) { values_[model_.index_of(rho)] = value; }

    std::span<const double> values() const noexcept { return values_; }
    const LatticeModel& model() const noexcept { return model_; }

private:
    LatticeModel model_;
    std::vector<double> values_;
};

/// Third-derivative tensor of a site energy over stencil entries, dense n x n x n.
class StencilTensor3 {
public:
    explicit StencilTensor3(std::size_t n) : n_(n), data_(n * n * n, 0.0) {}

    double operator()(std::size_t i, std::size_t j, std::size_t k) const { return data_[(i * n_ + j) * n_ + k]; }
    double& operator()(std::size_t i, std::size_t j, std::size_t k) { return data_[(i * n_ + j) * n_ + k]; }
    std::size_t size() const noexcept { return n_; }

    /// T[w]_{ij} = sum_k T_{ijk} w_k
    Eigen::MatrixXd contract(const Eigen::VectorXd& w) const;

private:
    std::size_t n_;
    std::vector<double> data_;
};

/// A site energy written as a sum of pair bonds whose deformed length is an affine
/// function of the stencil: len = reference_length + coeff . Du. Normalized so that
/// V(0) = 0.
class SitePotential {
public:
    struct Bond {
        double reference_length;
        Eigen::VectorXd coeff;  // indexed like the interaction range
    };

    SitePotential(const LatticeModel& model, PairPotential pair, std::vector<Bond> bonds);

    /// phi(F + D_1 u) + phi(2F + D_1 u - D_{-1} u) - (phi(F) + phi(2F)).
    static SitePotential lennard_jones_nnn(const LatticeModel& model, PairPotential pair = PairPotential{});

    double value(std::span<const double> stencil) const;
    Eigen::VectorXd gradient(std::span<const double> stencil) const;
    Eigen::MatrixXd hessian(std::span<const double> stencil) const;
    StencilTensor3 third(std::span<const double> stencil) const;
    /// sum_k d^3V/(d_i d_j d_k) w_k without forming the tensor.
    Eigen::MatrixXd third_contracted(std::span<const double> stencil, const Eigen::VectorXd& w) const;

    const LatticeModel& model() const noexcept { return model_; }
    const PairPotential& pair() const noexcept { return pair_; }
    const std::vector<Bond>& bonds() const noexcept { return bonds_; }

private:
    double deformed_length(const Bond& bond, std::span<const double> stencil) const;

    LatticeModel model_;
    PairPotential pair_;
    std::vector<Bond> bonds_;
    double shift_ = 0.0;
};

/// Deformed bond lengths below this are rejected with ConfigurationError.
inline constexpr double kMinBondLength = 0.5;

double site_energy(const FiniteDifferenceStencil& stencil, const LatticeModel& model);
Eigen::VectorXd site_energy_grad(const FiniteDifferenceStencil& stencil, const LatticeModel& model);
Eigen::MatrixXd site_energy_hess(const FiniteDifferenceStencil& stencil, const LatticeModel& model);
StencilTensor3 site_energy_d3(const FiniteDifferenceStencil& stencil, const LatticeModel& model);

/// Cauchy-Born strain energy density W(G) = V(G * R), shifted so W(0) = 0.
class CauchyBorn {
public:
    explicit CauchyBorn(SitePotential site);

    double value(double strain) const;
    double d1(double strain) const;
    double d2(double strain) const;
    double d3(double strain) const;

private:
    std::vector<double> lengths(double strain) const;

    SitePotential site_;
    std::vector<double> slope_;  // coeff . R per bond
};

// Default model (F = 1, r_cut = 2, normalized Lennard-Jones).
double cauchy_born_W(double strain);
double cauchy_born_W_d1(double strain);
double cauchy_born_W_d2(double strain);
double cauchy_born_W_d3(double strain);

}  // namespace atc
