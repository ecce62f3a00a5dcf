#include "atc/domain_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "atc/errors.hpp"

namespace atc {

namespace {

// pow() can land a hair off an exact integer; snap those so floor/ceil are stable.
double snap_to_integer(double v) {
    const double r = std::round(v);
    return std::abs(v - r) <= 1e-10 * std::max(1.0, std::abs(v)) ? r : v;
}

double mesh_exponent(double gamma, int dimension, NormKind norm) {
    return norm == NormKind::energy ? (1.0 + gamma) / (1.0 + 0.5 * dimension) : 1.0 + gamma;
}

}  // namespace

Radii optimal_radii(long r_core, double gamma, int dimension, NormKind norm, double r_cut) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw IllPosedParameters("decay exponent gamma must be positive");
    if (dimension < 1) throw UsageError("dimension must be positive");
    if (static_cast<double>(r_core) < 2.0 * r_cut) {
        std::ostringstream msg;
        msg << "R_core = " << r_core << " violates the overlap condition R_a - R_core >= 2 r_cut = " << 2.0 * r_cut;
        throw UsageError(msg.str());
    }
    double exponent = 0.0;
    if (norm == NormKind::energy) {
        if (2.0 * gamma - dimension <= 0.0)
            throw IllPosedParameters("energy-norm mesh optimization needs 2 gamma - d > 0");
        exponent = (1.0 + gamma) / (gamma - 0.5 * dimension);
    } else {
        exponent = 1.0 + 1.0 / gamma;
    }
    const long r_a = 2 * r_core;
    const double r_c = std::ceil(snap_to_integer(std::pow(static_cast<double>(r_a), exponent)));
    if (!(r_c < 1e15)) throw IllPosedParameters("optimal outer radius overflows");
    return {r_a, static_cast<long>(r_c)};
}

long mesh_size(double x, long r_a, double gamma, int dimension, NormKind norm) {
    if (r_a <= 0) throw UsageError("R_a must be positive");
    if (std::abs(x) < static_cast<double>(r_a)) throw UsageError("mesh_size is defined for |x| >= R_a only");
    const double h = std::floor(snap_to_integer(std::pow(std::abs(x) / r_a, mesh_exponent(gamma, dimension, norm))));
    return std::max(1L, static_cast<long>(h));
}

DomainDecomposition::DomainDecomposition(long r_core, long r_a, long r_c, const LatticeModel& model)
    : r_core_(r_core), r_a_(r_a), r_c_(r_c), reach_(model.reach()), model_(model) {
    if (r_core <= 0 || !(r_core < r_a) || !(r_a < r_c)) {
        std::ostringstream msg;
        msg << "radii must satisfy 0 < R_core < R_a < R_c, got " << r_core << ", " << r_a << ", " << r_c;
        throw UsageError(msg.str());
    }
    if (static_cast<double>(r_a - r_core) < 2.0 * model.r_cut()) {
        std::ostringstream msg;
        msg << "overlap width R_a - R_core = " << r_a - r_core << " is below 2 r_cut = " << 2.0 * model.r_cut();
        throw UsageError(msg.str());
    }
    if (r_core > r_a - 2 * reach_) throw UsageError("core must lie inside the atomistic double interior");
}

DomainDecomposition DomainDecomposition::optimal(long r_core, double gamma, NormKind norm, const LatticeModel& model) {
    const auto radii = optimal_radii(r_core, gamma, model.dimension(), norm, model.r_cut());
    return DomainDecomposition(r_core, radii.r_a, radii.r_c, model);
}

GradedMesh::GradedMesh(std::vector<long> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) throw UsageError("a mesh needs at least two nodes");
    for (std::size_t i = 1; i < nodes_.size(); ++i)
        if (nodes_[i] <= nodes_[i - 1]) throw UsageError("mesh nodes must be strictly increasing");
}

std::vector<long> GradedMesh::right_half(long from) const {
    const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), from);
    return {it, nodes_.end()};
}

GradedMesh build_graded_mesh(const DomainDecomposition& dec, double gamma, NormKind norm) {
    const long r_a = dec.r_a();
    const long r_c = dec.r_c();
    const int d = dec.model().dimension();

    std::vector<long> right;
    for (long x = 0; x <= r_a; ++x) right.push_back(x);
    for (long xi = r_a;;) {
        const long next = xi + mesh_size(static_cast<double>(xi), r_a, gamma, d, norm);
        if (next >= r_c) break;
        right.push_back(next);
        xi = next;
    }
    // Keep sizes monotone: a clamped stub at R_c is merged into the previous element.
    if (right.size() >= 2 && right.back() > r_a) {
        const long stub = r_c - right.back();
        const long previous = right.back() - right[right.size() - 2];
        if (stub < previous) right.pop_back();
    }
    right.push_back(r_c);

    std::vector<long> nodes;
    nodes.reserve(2 * right.size() - 1);
    for (auto it = right.rbegin(); it != right.rend(); ++it)
        if (*it != 0) nodes.push_back(-*it);
    nodes.insert(nodes.end(), right.begin(), right.end());
    return GradedMesh(std::move(nodes));
}

long count_dof(const DomainDecomposition& dec, const GradedMesh& mesh) {
    long coarse = 0;
    for (long x : mesh.nodes()) {
        const long a = std::abs(x);
        if (a > dec.r_a() && a != dec.r_c()) ++coarse;
    }
    return dec.lattice_atomistic().size() + coarse;
}

void write_mesh_dump(std::ostream& out, const GradedMesh& mesh) {
    for (long x : mesh.nodes()) out << x << '\n';
}

GradedMesh read_mesh_dump(std::istream& in) {
    std::vector<long> nodes;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t pos = 0;
        long x = 0;
        try {
            x = std::stol(line, &pos);
        } catch (const std::exception&) {
            throw UsageError("mesh dump line is not an integer: " + line);
        }
        if (line.find_first_not_of(" \t\r", pos) != std::string::npos)
            throw UsageError("mesh dump line is not an integer: " + line);
        nodes.push_back(x);
    }
    return GradedMesh(std::move(nodes));
}

}  // namespace atc
