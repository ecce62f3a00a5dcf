#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "atc/domain_mesh.hpp"
#include "atc/models.hpp"

namespace atc {

enum class HessianMode { full_newton, gauss_newton };

struct NewtonOptions {
    double tolerance = 1e-10;       // on max |grad Psi|
    int max_iterations = 50;
    double damping = 0.5;           // backtracking factor
    double sufficient_decrease = 1e-4;
    double min_step = 1e-10;
    HessianMode hessian_mode = HessianMode::full_newton;

    void validate() const;
};

/// The five-block unknown (u_a, u_c, lambda_a, lambda_c, eta) of the coupled problem.
/// lambda_a lives on the atomistic double interior; lambda_c is stored with the continuum
/// layout and is identically zero on the core-boundary node (outer nodes are not stored).
struct SystemState {
    AtomisticState u_a;
    ContinuumState u_c;
    Eigen::VectorXd lambda_a;
    ContinuumState lambda_c;
    std::array<double, 2> eta{0.0, 0.0};  // right (x > 0), left (x < 0) overlap component
};

/// Sizes and offsets of the blocks in the flat KKT vector.
struct KktLayout {
    Eigen::Index atomistic = 0;
    Eigen::Index continuum = 0;
    Eigen::Index adjoint_atomistic = 0;
    Eigen::Index adjoint_continuum = 0;
    Eigen::Index multipliers = 2;

    Eigen::Index primal() const noexcept { return atomistic + continuum; }
    Eigen::Index dual() const noexcept { return adjoint_atomistic + adjoint_continuum + multipliers; }
    Eigen::Index size() const noexcept { return primal() + dual(); }
    Eigen::Index continuum_offset() const noexcept { return atomistic; }
    Eigen::Index adjoint_atomistic_offset() const noexcept { return primal(); }
    Eigen::Index adjoint_continuum_offset() const noexcept { return primal() + adjoint_atomistic; }
    Eigen::Index multiplier_offset() const noexcept { return primal() + adjoint_atomistic + adjoint_continuum; }
};

/// grad Psi and the symmetric saddle-point matrix [[A, B^T], [B, 0]].
struct KktSystem {
    SparseMatrix hessian;
    Eigen::VectorXd gradient;
    KktLayout layout;
};

/// Piecewise-linear interpolant of an atomistic state on the overlap Omega_o.
class OverlapInterpolant {
public:
    OverlapInterpolant(const AtomisticState& u_a, const DomainDecomposition& dec);

    /// Only defined for x in one of the two overlap intervals.
    double value(double x) const;
    /// Gradient on the unit element [xi, xi + 1] of the overlap.
    double gradient(long xi) const;
    double nodal(long xi) const;

private:
    void require_inside(double x) const;

    AtomisticState u_;
    IndexRange right_;
    IndexRange left_;
};

OverlapInterpolant interpolate_atomistic(const AtomisticState& u_a, const DomainDecomposition& dec);

/// Optimization-based coupling of an atomistic and a continuum subproblem on the overlap.
class CouplingProblem {
public:
    CouplingProblem(DomainDecomposition dec, GradedMesh mesh, ExternalForce force);

    /// Decomposition and mesh from the optimal-parameter formulas, manufactured forces.
    static CouplingProblem manufactured(long r_core, double gamma, NormKind norm = NormKind::energy,
                                        const LatticeModel& model = LatticeModel{});

    const DomainDecomposition& decomposition() const noexcept { return dec_; }
    const GradedMesh& mesh() const noexcept { return mesh_; }
    const ExternalForce& force() const noexcept { return force_; }
    const AtomisticModel& atomistic() const noexcept { return atomistic_; }
    const ContinuumModel& continuum() const noexcept { return continuum_; }
    const KktLayout& layout() const noexcept { return layout_; }

    SystemState zero_state() const;
    Eigen::VectorXd pack(const SystemState& state) const;
    SystemState unpack(const Eigen::VectorXd& z) const;

    /// 1/2 sum over overlap elements of |D_1 u_a - grad u_c|^2 h_T.
    double objective(const AtomisticState& u_a, const ContinuumState& u_c) const;
    /// Integrals of I u_a - u_c over the right and left overlap components.
    std::array<double, 2> mean_zero_constraints(const AtomisticState& u_a, const ContinuumState& u_c) const;

    /// Psi with the additive sign convention.
    double lagrangian(const SystemState& state) const;
    Eigen::VectorXd lagrangian_gradient(const SystemState& state) const;
    KktSystem lagrangian_hessian(const SystemState& state, HessianMode mode) const;

    /// Atomistic equilibrium residual on the double interior and continuum residual on the
    /// interior nodes.
    Eigen::VectorXd atomistic_residual(const AtomisticState& u_a) const;
    Eigen::VectorXd continuum_residual(const ContinuumState& u_c) const;

private:
    Eigen::VectorXd primal(const SystemState& state) const;
    Eigen::VectorXd atomistic_adjoint_full(const Eigen::VectorXd& lambda_a) const;
    void build_linear_operators();

    DomainDecomposition dec_;
    GradedMesh mesh_;
    ExternalForce force_;
    AtomisticModel atomistic_;
    ContinuumModel continuum_;
    KktLayout layout_;
    SparseMatrix mismatch_;         // overlap elements x primal
    SparseMatrix mean_zero_;        // 2 x primal
    SparseMatrix select_atomistic_; // test sites x atomistic
    SparseMatrix select_continuum_; // interior nodes x continuum
};

struct KktSolution {
    Eigen::VectorXd x;
    double relative_residual = 0.0;
};

/// Direct sparse LU of the saddle-point matrix with iterative refinement.
KktSolution solve_kkt_linear(const SparseMatrix& matrix, const Eigen::VectorXd& rhs);
KktSolution solve_kkt_linear(const KktSystem& system, const Eigen::VectorXd& rhs);

struct NewtonIteration {
    int iter = 0;
    double residual = 0.0;      // max |grad Psi| at the start of the iteration
    double step_length = 0.0;   // accepted alpha (0 on the final row)
    double objective = 0.0;
    double linear_residual = 0.0;
};

struct NewtonDiagnostics {
    std::vector<NewtonIteration> history;
    int iterations = 0;
    double final_residual = 0.0;
    bool converged = false;

    double worst_linear_residual() const;
    /// CSV lines "iter,residual,step_length,objective" with a header.
    void write_csv(std::ostream& out) const;
};

struct NewtonResult {
    SystemState state;
    NewtonDiagnostics diagnostics;
};

/// Damped Newton on grad Psi = 0 with backtracking on the max-norm of the residual.
/// Never throws on non-convergence: the last iterate is returned with converged = false.
NewtonResult newton_iterate(const CouplingProblem& problem, const SystemState& initial, const NewtonOptions& opts = {});

/// newton_iterate, but throws NonConvergence (with the residual history) on failure.
NewtonResult newton_solve(const CouplingProblem& problem, const SystemState& initial, const NewtonOptions& opts = {});

/// u_a on |xi| <= R_a, the continuum interpolant for R_a < |xi| <= R_c, on [-R_c, R_c].
LatticeDisplacement assemble_atc_solution(const CouplingProblem& problem, const SystemState& state);

/// Value of the continuum field at an arbitrary lattice site (zero beyond R_c and inside the core).
double continuum_value_at(const CouplingProblem& problem, const ContinuumState& u_c, long xi);

}  // namespace atc
