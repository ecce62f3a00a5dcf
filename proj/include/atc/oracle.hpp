#pragma once

#include "atc/coupling.hpp"
#include "atc/domain_mesh.hpp"
#include "atc/models.hpp"

namespace atc {

/// Minimizer of the truncated lattice energy over displacements vanishing outside L.
struct ReferenceSolution {
    LatticeDisplacement values;  // on [-R_c, R_c]
    double residual = 0.0;       // max |grad E| over L
    int iterations = 0;
};

struct ReferenceOptions {
    double tolerance = 1e-10;
    int max_iterations = 50;
};

/// Brute-force Newton solve of the full atomistic problem on L = [-R_c, R_c] with the given
/// forces (zero outside L). Throws NonConvergence with the residual history.
ReferenceSolution solve_full_atomistic(const DomainDecomposition& dec, const ExternalForce& force,
                                       const ReferenceOptions& opts = {});
/// Same with manufactured forces for the closed-form solution.
ReferenceSolution solve_full_atomistic(const DomainDecomposition& dec, double gamma, const ReferenceOptions& opts = {});

/// The closed-form solution sampled on a range.
LatticeDisplacement sample_exact_solution(IndexRange sites, double gamma);

/// l2 norm of D_1 (u - reference) over the bonds with both ends in the common index range.
double energy_seminorm_error(const LatticeDisplacement& u, const LatticeDisplacement& reference);
/// l-infinity analogue of energy_seminorm_error.
double max_norm_error(const LatticeDisplacement& u, const LatticeDisplacement& reference);

enum class BoundForm {
    exact_differences,  // D and D^2 as finite differences of the closed form
    asymptotic,         // |D u| ~ |xi|^-gamma, |D^2 u| ~ |xi|^(-1-gamma)
};

struct ConjecturedBound {
    double far_field = 0.0;  // ||D u||^2 over Z \ L
    double continuum = 0.0;  // ||h D^2 u||^2 over L_c
    double total() const;    // sqrt(far_field + continuum)
};

/// Both terms of the conjectured a priori bound for the closed-form solution (squared).
ConjecturedBound conjectured_bound(double gamma, const DomainDecomposition& dec, const GradedMesh& mesh,
                                   BoundForm form = BoundForm::exact_differences);

}  // namespace atc
