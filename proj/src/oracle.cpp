#include "atc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "atc/errors.hpp"

namespace atc {

namespace {

void require_same_index_set(const LatticeDisplacement& u, const LatticeDisplacement& reference) {
    if (u.range() != reference.range()) {
        std::ostringstream msg;
        msg << "error functional needs fields on the same sites, got [" << u.range().first << ", " << u.range().last
            << "] and [" << reference.range().first << ", " << reference.range().last << "]";
        throw UsageError(msg.str());
    }
}

// Far-field sum is exact over this many sites past R_c on each side, then an integral tail.
constexpr long kFarFieldExactSites = 10000;

}  // namespace

ReferenceSolution solve_full_atomistic(const DomainDecomposition& dec, const ExternalForce& force,
                                       const ReferenceOptions& opts) {
    const long r_c = dec.r_c();
    const long reach = dec.model().reach();
    const IndexRange lattice = dec.lattice_full();
    // Sites fixed at zero around L, and every site energy touching L.
    const IndexRange padded{-r_c - 2 * reach, r_c + 2 * reach};
    const IndexRange energy{-r_c - reach, r_c + reach};
    const AtomisticModel model(padded, energy, lattice, force, SitePotential::lennard_jones_nnn(dec.model()));

    const Eigen::Index n = lattice.size();
    const Eigen::Index offset = lattice.first - padded.first;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(padded.size());

    const auto residual_of = [&](const Eigen::VectorXd& state) {
        return Eigen::VectorXd(model.gradient(state).segment(offset, n));
    };

    Eigen::VectorXd g = residual_of(u);
    double residual = g.cwiseAbs().maxCoeff();
    std::vector<double> history{residual};
    int iter = 0;
    for (; residual >= opts.tolerance; ++iter) {
        if (iter >= opts.max_iterations)
            throw NonConvergence("full atomistic reference solve did not converge", history);
        const SparseMatrix h = model.hessian(u).block(offset, offset, n, n);
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(h);
        Eigen::VectorXd step;
        if (ldlt.info() == Eigen::Success) {
            step = ldlt.solve(-g);
        } else {
            Eigen::SparseLU<SparseMatrix> lu(h);
            if (lu.info() != Eigen::Success)
                throw SolverError("reference Hessian is singular", std::numeric_limits<double>::infinity());
            step = lu.solve(-g);
        }
        double alpha = 1.0;
        bool accepted = false;
        while (alpha > 1e-10) {
            Eigen::VectorXd trial = u;
            trial.segment(offset, n) += alpha * step;
            try {
                const Eigen::VectorXd g_trial = residual_of(trial);
                const double r_trial = g_trial.cwiseAbs().maxCoeff();
                if (r_trial <= (1.0 - 1e-4 * alpha) * residual) {
                    u = trial;
                    g = g_trial;
                    residual = r_trial;
                    accepted = true;
                    break;
                }
            } catch (const ConfigurationError&) {
            }
            alpha *= 0.5;
        }
        history.push_back(residual);
        if (!accepted) throw NonConvergence("line search failed in the full atomistic reference solve", history);
    }

    ReferenceSolution out;
    out.values = LatticeDisplacement(lattice.first, u.segment(offset, n));
    out.residual = residual;
    out.iterations = iter;
    return out;
}

ReferenceSolution solve_full_atomistic(const DomainDecomposition& dec, double gamma, const ReferenceOptions& opts) {
    return solve_full_atomistic(dec, manufacture_forces(gamma, dec), opts);
}

LatticeDisplacement sample_exact_solution(IndexRange sites, double gamma) {
    LatticeDisplacement out = LatticeDisplacement::zeros(sites);
    for (long xi = sites.first; xi <= sites.last; ++xi) out[xi] = exact_solution(static_cast<double>(xi), gamma);
    return out;
}

double energy_seminorm_error(const LatticeDisplacement& u, const LatticeDisplacement& reference) {
    require_same_index_set(u, reference);
    const Eigen::VectorXd e = u.values - reference.values;
    double sum = 0.0;
    for (Eigen::Index i = 0; i + 1 < e.size(); ++i) {
        const double d = e[i + 1] - e[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double max_norm_error(const LatticeDisplacement& u, const LatticeDisplacement& reference) {
    require_same_index_set(u, reference);
    const Eigen::VectorXd e = u.values - reference.values;
    double worst = 0.0;
    for (Eigen::Index i = 0; i + 1 < e.size(); ++i) worst = std::max(worst, std::abs(e[i + 1] - e[i]));
    return worst;
}

double ConjecturedBound::total() const { return std::sqrt(far_field + continuum); }

ConjecturedBound conjectured_bound(double gamma, const DomainDecomposition& dec, const GradedMesh& mesh,
                                   BoundForm form) {
    const auto& range = dec.model().interaction_range();
    const long r_core = dec.r_core();
    const long r_c = dec.r_c();
    const long reach = dec.model().reach();
    const std::vector<long> half = mesh.right_half(r_core);
    if (half.empty() || half.front() != r_core || half.back() != r_c)
        throw UsageError("mesh does not span [R_core, R_c]");

    // Closed form on the right half only: |D^k u| is symmetric under xi -> -xi for an odd field.
    const long hi = r_c + kFarFieldExactSites + 2 * reach + 1;
    std::vector<double> u(static_cast<std::size_t>(hi + 2 * reach + 1));
    const auto at = [&](long xi) -> double { return u[static_cast<std::size_t>(xi + 2 * reach)]; };
    if (form == BoundForm::exact_differences)
        for (long xi = -2 * reach; xi <= hi; ++xi)
            u[static_cast<std::size_t>(xi + 2 * reach)] = exact_solution(static_cast<double>(xi), gamma);

    const auto first_sq = [&](long xi) {
        if (form == BoundForm::asymptotic) return std::pow(static_cast<double>(xi), -2.0 * gamma);
        double s = 0.0;
        for (int rho : range) {
            const double d = at(xi + rho) - at(xi);
            s += d * d;
        }
        return s;
    };
    const auto second_sq = [&](long xi) {
        if (form == BoundForm::asymptotic) return std::pow(static_cast<double>(xi), -2.0 - 2.0 * gamma);
        double s = 0.0;
        for (int rho : range)
            for (int sigma : range) {
                const double d = at(xi + rho + sigma) - at(xi + rho) - at(xi + sigma) + at(xi);
                s += d * d;
            }
        return s;
    };

    ConjecturedBound out;
    // ||h D^2 u||^2 over L_c = {R_core <= |xi| <= R_c}; h is the size of the element [a, b) holding xi.
    double cont = 0.0;
    for (std::size_t e = 0; e + 1 < half.size(); ++e) {
        const double h = static_cast<double>(half[e + 1] - half[e]);
        const long stop = e + 2 == half.size() ? half[e + 1] : half[e + 1] - 1;
        for (long xi = half[e]; xi <= stop; ++xi) cont += h * h * second_sq(xi);
    }
    out.continuum = 2.0 * cont;

    if (2.0 * gamma <= 1.0) {
        out.far_field = std::numeric_limits<double>::infinity();
        return out;
    }
    double far = 0.0;
    const long last_exact = r_c + kFarFieldExactSites;
    for (long xi = r_c + 1; xi <= last_exact; ++xi) far += first_sq(xi);
    // Tail: |D_rho u| ~ |rho u'(x)| with u'(x) ~ c x^-gamma.
    double weight = 0.0;
    for (int rho : range) weight += static_cast<double>(rho) * rho;
    const double c = form == BoundForm::asymptotic ? 1.0 : 0.1 * (1.0 - gamma);
    const double scale = form == BoundForm::asymptotic ? 1.0 : weight * c * c;
    const double start = static_cast<double>(last_exact) + 0.5;
    far += scale * std::pow(start, 1.0 - 2.0 * gamma) / (2.0 * gamma - 1.0);
    out.far_field = 2.0 * far;
    return out;
}

}  // namespace atc
