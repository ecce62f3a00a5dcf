#pragma once

#include <iosfwd>
#include <vector>

#include "atc/lattice_potential.hpp"

namespace atc {

enum class NormKind { energy, uniform };

/// Closed integer interval [first, last].
struct IndexRange {
    long first = 0;
    long last = -1;

    long size() const noexcept { return last >= first ? last - first + 1 : 0; }
    bool contains(long i) const noexcept { return i >= first && i <= last; }
    bool operator==(const IndexRange&) const = default;
};

struct Radii {
    long r_a = 0;
    long r_c = 0;
};

/// R_a = 2 R_core, R_c = ceil(R_a^e) with e = (1+gamma)/(gamma-d/2) (energy norm)
/// or e = 1 + 1/gamma (uniform norm).
Radii optimal_radii(long r_core, double gamma, int dimension, NormKind norm, double r_cut = 2.0);

/// Graded element size max(1, floor((|x|/R_a)^e)), e = (1+gamma)/(1+d/2) or 1+gamma.
long mesh_size(double x, long r_a, double gamma, int dimension, NormKind norm);

/// Symmetric 1D decomposition: core [-R_core, R_core], atomistic [-R_a, R_a],
/// whole domain [-R_c, R_c], overlap [R_core, R_a] and its mirror image.
class DomainDecomposition {
public:
    DomainDecomposition(long r_core, long r_a, long r_c, const LatticeModel& model = LatticeModel{});

    /// Radii from optimal_radii().
    static DomainDecomposition optimal(long r_core, double gamma, NormKind norm,
                                       const LatticeModel& model = LatticeModel{});

    long r_core() const noexcept { return r_core_; }
    long r_a() const noexcept { return r_a_; }
    long r_c() const noexcept { return r_c_; }
    const LatticeModel& model() const noexcept { return model_; }

    IndexRange lattice_full() const noexcept { return {-r_c_, r_c_}; }
    IndexRange lattice_atomistic() const noexcept { return {-r_a_, r_a_}; }
    /// Sites whose whole stencil lies in the atomistic lattice.
    IndexRange atomistic_interior() const noexcept { return {-(r_a_ - reach_), r_a_ - reach_}; }
    /// Interior of the interior.
    IndexRange atomistic_double_interior() const noexcept { return {-(r_a_ - 2 * reach_), r_a_ - 2 * reach_}; }
    /// Right overlap component [R_core, R_a]; the left one is its mirror image.
    IndexRange overlap_right() const noexcept { return {r_core_, r_a_}; }
    IndexRange overlap_left() const noexcept { return {-r_a_, -r_core_}; }

private:
    long r_core_;
    long r_a_;
    long r_c_;
    int reach_;
    LatticeModel model_;
};

class GradedMesh {
public:
    explicit GradedMesh(std::vector<long> nodes);

    const std::vector<long>& nodes() const noexcept { return nodes_; }
    std::size_t element_count() const noexcept { return nodes_.size() - 1; }
    long element_size(std::size_t e) const { return nodes_[e + 1] - nodes_[e]; }

    /// Nodes with x >= from, ascending (for the right continuum half-domain).
    std::vector<long> right_half(long from) const;

private:
    std::vector<long> nodes_;
};

/// Every integer in [-R_a, R_a], then graded nodes xi + mesh_size(xi) while below R_c,
/// terminal node at R_c, mirrored. When the clamped last element would be shorter than
/// its neighbour the last graded node is dropped so element sizes stay monotone.
GradedMesh build_graded_mesh(const DomainDecomposition& dec, double gamma, NormKind norm);

/// Atomistic sites plus coarse mesh nodes with |x| > R_a, excluding the outer boundary nodes.
long count_dof(const DomainDecomposition& dec, const GradedMesh& mesh);

/// One node coordinate per line.
void write_mesh_dump(std::ostream& out, const GradedMesh& mesh);
GradedMesh read_mesh_dump(std::istream& in);

}  // namespace atc
