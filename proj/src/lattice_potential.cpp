#include "atc/lattice_potential.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "atc/errors.hpp"

namespace atc {

namespace {

void require_positive_distance(double r) {
    if (!std::isfinite(r) || r <= 0.0) {
        std::ostringstream msg;
        msg << "pair distance must be finite and positive, got " << r;
        throw DomainError(msg.str());
    }
}

struct Powers {
    double s6;
    double s12;
};

Powers reduced_powers(double r0, double r) {
    const double s = r0 / r;
    const double s2 = s * s;
    const double s6 = s2 * s2 * s2;
    return {s6, s6 * s6};
}

const LatticeModel& default_model() {
    static const LatticeModel model;
    return model;
}

const CauchyBorn& default_cauchy_born() {
    static const CauchyBorn cb(SitePotential::lennard_jones_nnn(default_model()));
    return cb;
}

}  // namespace

PairPotential::PairPotential(double well_depth, double equilibrium_distance)
    : well_depth_(well_depth), equilibrium_distance_(equilibrium_distance) {
    if (!(well_depth > 0.0) || !(equilibrium_distance > 0.0))
        throw UsageError("Lennard-Jones parameters must be positive");
}

double PairPotential::value(double r) const {
    require_positive_distance(r);
    const auto [s6, s12] = reduced_powers(equilibrium_distance_, r);
    return well_depth_ * (s12 - 2.0 * s6);
}

double PairPotential::d1(double r) const {
    require_positive_distance(r);
    const auto [s6, s12] = reduced_powers(equilibrium_distance_, r);
    return well_depth_ * (-12.0 * s12 + 12.0 * s6) / r;
}

double PairPotential::d2(double r) const {
    require_positive_distance(r);
    const auto [s6, s12] = reduced_powers(equilibrium_distance_, r);
    return well_depth_ * (156.0 * s12 - 84.0 * s6) / (r * r);
}

double PairPotential::d3(double r) const {
    require_positive_distance(r);
    const auto [s6, s12] = reduced_powers(equilibrium_distance_, r);
    return well_depth_ * (-2184.0 * s12 + 672.0 * s6) / (r * r * r);
}

double phi(double r) { return PairPotential{}.value(r); }
double phi_d1(double r) { return PairPotential{}.d1(r); }
double phi_d2(double r) { return PairPotential{}.d2(r); }
double phi_d3(double r) { return PairPotential{}.d3(r); }

LatticeModel::LatticeModel(int dimension, double strain, double r_cut)
    : dimension_(dimension), strain_(strain), r_cut_(r_cut) {
    if (dimension != 1) throw UsageError("only one-dimensional lattices are implemented");
    if (!std::isfinite(strain) || strain == 0.0) throw UsageError("macroscopic strain F must be finite and nonzero");
    if (!std::isfinite(r_cut) || r_cut <= 0.0) throw UsageError("cutoff radius must be positive");
    const int max_offset = static_cast<int>(std::floor(r_cut / std::abs(strain)));
    for (int rho = -max_offset; rho <= max_offset; ++rho) {
        if (rho == 0) continue;
        if (std::abs(strain * rho) <= r_cut) range_.push_back(rho);
    }
}

std::size_t LatticeModel::index_of(int rho) const {
    const auto it = std::lower_bound(range_.begin(), range_.end(), rho);
    if (it == range_.end() || *it != rho) {
        std::ostringstream msg;
        msg << "offset " << rho << " is not in the interaction range";
        throw UsageError(msg.str());
    }
    return static_cast<std::size_t>(it - range_.begin());
}

FiniteDifferenceStencil::FiniteDifferenceStencil(const LatticeModel& model)
    : model_(model), values_(model.interaction_range().size(), 0.0) {}

FiniteDifferenceStencil::FiniteDifferenceStencil(const LatticeModel& model, std::span<const double> values)
    : model_(model), values_(values.begin(), values.end()) {
    if (values_.size() != model.interaction_range().size())
        throw UsageError("stencil size does not match the interaction range");
}

Eigen::MatrixXd StencilTensor3::contract(const Eigen::VectorXd& w) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_, n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
            for (std::size_t k = 0; k < n_; ++k) out(i, j) += (*this)(i, j, k) * w[k];
    return out;
}

SitePotential::SitePotential(const LatticeModel& model, PairPotential pair, std::vector<Bond> bonds)
    : model_(model), pair_(pair), bonds_(std::move(bonds)) {
    const auto n = static_cast<Eigen::Index>(model_.interaction_range().size());
    for (const auto& bond : bonds_) {
        if (bond.coeff.size() != n) throw UsageError("bond coefficient vector does not match the interaction range");
        shift_ += pair_.value(bond.reference_length);
    }
}

SitePotential SitePotential::lennard_jones_nnn(const LatticeModel& model, PairPotential pair) {
    const auto& range = model.interaction_range();
    if (range != std::vector<int>{-2, -1, 1, 2})
        throw UsageError("next-nearest-neighbour site potential needs interaction range {-2,-1,1,2}");
    const auto n = static_cast<Eigen::Index>(range.size());
    const auto plus = static_cast<Eigen::Index>(model.index_of(1));
    const auto minus = static_cast<Eigen::Index>(model.index_of(-1));
    const double F = model.strain();

    Bond nearest{F, Eigen::VectorXd::Zero(n)};
    nearest.coeff[plus] = 1.0;
    Bond next{2.0 * F, Eigen::VectorXd::Zero(n)};
    next.coeff[plus] = 1.0;
    next.coeff[minus] = -1.0;
    return SitePotential(model, pair, {nearest, next});
}

double SitePotential::deformed_length(const Bond& bond, std::span<const double> stencil) const {
    double len = 0.0;
    for (std::size_t k = 0; k < stencil.size(); ++k) len += bond.coeff[static_cast<Eigen::Index>(k)] * stencil[k];
    len = bond.reference_length + len;
    if (!std::isfinite(len) || std::abs(len) < kMinBondLength) {
        std::ostringstream msg;
        msg << "deformed bond length " << len << " below the evaluation guard " << kMinBondLength;
        throw ConfigurationError(msg.str());
    }
    return len;
}

namespace {

void require_stencil_size(std::span<const double> stencil, const LatticeModel& model) {
    if (stencil.size() != model.interaction_range().size())
        throw UsageError("stencil size does not match the interaction range");
}

}  // namespace

double SitePotential::value(std::span<const double> stencil) const {
    require_stencil_size(stencil, model_);
    double energy = 0.0;
    for (const auto& bond : bonds_) energy += pair_.value(deformed_length(bond, stencil));
    return energy - shift_;
}

Eigen::VectorXd SitePotential::gradient(std::span<const double> stencil) const {
    require_stencil_size(stencil, model_);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(stencil.size()));
    for (const auto& bond : bonds_) g += pair_.d1(deformed_length(bond, stencil)) * bond.coeff;
    return g;
}

Eigen::MatrixXd SitePotential::hessian(std::span<const double> stencil) const {
    require_stencil_size(stencil, model_);
    const auto n = static_cast<Eigen::Index>(stencil.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (const auto& bond : bonds_)
        h += pair_.d2(deformed_length(bond, stencil)) * bond.coeff * bond.coeff.transpose();
    return h;
}

StencilTensor3 SitePotential::third(std::span<const double> stencil) const {
    require_stencil_size(stencil, model_);
    const std::size_t n = stencil.size();
    StencilTensor3 t(n);
    for (const auto& bond : bonds_) {
        const double d3 = pair_.d3(deformed_length(bond, stencil));
        const auto& c = bond.coeff;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k)
                    t(i, j, k) += d3 * c[static_cast<Eigen::Index>(i)] * c[static_cast<Eigen::Index>(j)] *
                                  c[static_cast<Eigen::Index>(k)];
    }
    return t;
}

Eigen::MatrixXd SitePotential::third_contracted(std::span<const double> stencil, const Eigen::VectorXd& w) const {
    require_stencil_size(stencil, model_);
    const auto n = static_cast<Eigen::Index>(stencil.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (const auto& bond : bonds_)
        h += pair_.d3(deformed_length(bond, stencil)) * bond.coeff.dot(w) * bond.coeff * bond.coeff.transpose();
    return h;
}

double site_energy(const FiniteDifferenceStencil& stencil, const LatticeModel& model) {
    return SitePotential::lennard_jones_nnn(model).value(stencil.values());
}

Eigen::VectorXd site_energy_grad(const FiniteDifferenceStencil& stencil, const LatticeModel& model) {
    return SitePotential::lennard_jones_nnn(model).gradient(stencil.values());
}

Eigen::MatrixXd site_energy_hess(const FiniteDifferenceStencil& stencil, const LatticeModel& model) {
    return SitePotential::lennard_jones_nnn(model).hessian(stencil.values());
}

StencilTensor3 site_energy_d3(const FiniteDifferenceStencil& stencil, const LatticeModel& model) {
    return SitePotential::lennard_jones_nnn(model).third(stencil.values());
}

CauchyBorn::CauchyBorn(SitePotential site) : site_(std::move(site)) {
    const auto& range = site_.model().interaction_range();
    for (const auto& bond : site_.bonds()) {
        double slope = 0.0;
        for (std::size_t k = 0; k < range.size(); ++k) slope += bond.coeff[static_cast<Eigen::Index>(k)] * range[k];
        slope_.push_back(slope);
    }
}

std::vector<double> CauchyBorn::lengths(double strain) const {
    const auto& range = site_.model().interaction_range();
    std::vector<double> stencil(range.size());
    for (std::size_t k = 0; k < range.size(); ++k) stencil[k] = strain * range[k];
    // Same arithmetic path as SitePotential so homogeneous strains agree bit for bit.
    std::vector<double> out;
    for (const auto& bond : site_.bonds()) {
        double len = 0.0;
        for (std::size_t k = 0; k < stencil.size(); ++k) len += bond.coeff[static_cast<Eigen::Index>(k)] * stencil[k];
        len = bond.reference_length + len;
        if (!std::isfinite(len) || std::abs(len) < kMinBondLength) {
            std::ostringstream msg;
            msg << "strain " << strain << " collapses a bond (length " << len << ")";
            throw ConfigurationError(msg.str());
        }
        out.push_back(len);
    }
    return out;
}

double CauchyBorn::value(double strain) const {
    const auto& range = site_.model().interaction_range();
    std::vector<double> stencil(range.size());
    for (std::size_t k = 0; k < range.size(); ++k) stencil[k] = strain * range[k];
    return site_.value(stencil);
}

double CauchyBorn::d1(double strain) const {
    const auto len = lengths(strain);
    double out = 0.0;
    for (std::size_t b = 0; b < len.size(); ++b) out += site_.pair().d1(len[b]) * slope_[b];
    return out;
}

double CauchyBorn::d2(double strain) const {
    const auto len = lengths(strain);
    double out = 0.0;
    for (std::size_t b = 0; b < len.size(); ++b) out += site_.pair().d2(len[b]) * slope_[b] * slope_[b];
    return out;
}

double CauchyBorn::d3(double strain) const {
    const auto len = lengths(strain);
    double out = 0.0;
    for (std::size_t b = 0; b < len.size(); ++b)
        out += site_.pair().d3(len[b]) * slope_[b] * slope_[b] * slope_[b];
    return out;
}

double cauchy_born_W(double strain) { return default_cauchy_born().value(strain); }
double cauchy_born_W_d1(double strain) { return default_cauchy_born().d1(strain); }
double cauchy_born_W_d2(double strain) { return default_cauchy_born().d2(strain); }
double cauchy_born_W_d3(double strain) { return default_cauchy_born().d3(strain); }

}  // namespace atc
