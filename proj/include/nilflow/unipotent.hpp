#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nilflow/qlinalg.hpp"

namespace nilflow {

class UnipotentGroupSpec;
using SpecPtr = std::shared_ptr<const UnipotentGroupSpec>;

/// Matrix realization of a unipotent group: an algebra basis of strictly
/// upper-triangular n x n matrices whose span is closed under the bracket.
/// Algebra elements are handled in coordinates w.r.t. this basis, so the
/// Lie algebra is identified with K^dim.
class UnipotentGroupSpec : public std::enable_shared_from_this<UnipotentGroupSpec> {
public:
    static SpecPtr make(int n, std::vector<KMat> algebra_basis, const FieldPtr& f,
                        std::string name = "");

    // Builtins: "abelian:m" (R^m as a matrix group), "heisenberg3",
    // "full_un:n" (all strictly upper triangular of size n).
    static SpecPtr abelian(int m, const FieldPtr& f);
    static SpecPtr heisenberg3(const FieldPtr& f);
    static SpecPtr full_un(int n, const FieldPtr& f);

    int matrix_size() const { return n_; }
    int dim() const { return static_cast<int>(basis_.size()); }
    const std::vector<KMat>& algebra_basis() const { return basis_; }
    const std::string& name() const { return name_; }
    const FieldPtr& field() const { return field_; }
    bool is_abelian() const;

    KMat algebra_matrix(const KVec& coords) const; // sum coords[i] * basis[i]
    KVec algebra_coords(const KMat& a) const;      // inverse of the above
    bool algebra_contains(const KMat& a) const;

private:
    UnipotentGroupSpec() = default;

    int n_ = 0;
    FieldPtr field_;
    std::vector<KMat> basis_;
    std::string name_;
    std::vector<KVec> flat_rref_;   // RREF of flattened basis, for membership
    std::vector<int> flat_pivots_;
};

/// Upper-triangular matrix with unit diagonal, attached to a spec.
class GroupElement {
public:
    GroupElement(SpecPtr spec, KMat matrix);

    const KMat& matrix() const { return m_; }
    const SpecPtr& spec() const { return spec_; }

    bool operator==(const GroupElement& o) const { return m_ == o.m_; }

private:
    SpecPtr spec_;
    KMat m_;
};

GroupElement mul(const GroupElement& g, const GroupElement& h);
GroupElement inv(const GroupElement& g);

// Matrix-level exponential/logarithm; finite series thanks to nilpotency.
KMat exp_matrix(const KMat& a);
KMat log_matrix(const KMat& g);

GroupElement exp_elem(const SpecPtr& spec, const KVec& coords);
KVec log_elem(const GroupElement& g);

// Span of pairwise brackets of the algebra basis, as a subspace of the
// coordinate space K^dim.
Subspace commutator_subalgebra(const SpecPtr& spec);

struct Abelianization {
    int m_ab;  // dim of G/[G,G]
    KMat dpi;  // m_ab x dim projection in algebra coordinates
};

// Quotient onto the coordinates complementary to an RREF basis of [g, g].
Abelianization abelianization(const SpecPtr& spec);

/// Generators asserted (not verified) to generate a lattice in G.
struct GroupLattice {
    std::vector<GroupElement> generators;
};

// HNF basis of the subgroup of the abelianization generated by the
// projections of the lattice generators. Requires rational projections.
LatticeBasis project_lattice(const GroupLattice& gamma, const SpecPtr& spec);

} // namespace nilflow
