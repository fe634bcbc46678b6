#pragma once

#include <optional>
#include <vector>

#include "nilflow/number_field.hpp"

namespace nilflow {

using KVec = std::vector<Scalar>;

KVec kvec_zero(int n, const FieldPtr& f);
KVec kvec_add(const KVec& a, const KVec& b);
KVec kvec_sub(const KVec& a, const KVec& b);
KVec kvec_scale(const Scalar& c, const KVec& a);
bool kvec_is_zero(const KVec& a);

/// Dense matrix over Q(theta), row major.
class KMat {
public:
    KMat(int rows, int cols, const FieldPtr& f);
    static KMat identity(int n, const FieldPtr& f);
    static KMat from_rows(const std::vector<KVec>& rows, const FieldPtr& f);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    const FieldPtr& field() const { return field_; }

    Scalar& at(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
    const Scalar& at(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

    KVec row(int i) const;
    KVec col(int j) const;
    void set_row(int i, const KVec& v);

    KMat operator*(const KMat& o) const;
    KMat operator+(const KMat& o) const;
    KMat operator-(const KMat& o) const;
    KVec apply(const KVec& v) const; // matrix * column vector
    KMat transpose() const;
    KMat scaled(const Scalar& c) const;

    bool operator==(const KMat& o) const;

private:
    int rows_, cols_;
    FieldPtr field_;
    std::vector<Scalar> a_;
};

// In-place reduced row echelon form; returns pivot column indices.
std::vector<int> rref_inplace(std::vector<KVec>& rows);

// Solve M x = b exactly; nullopt when inconsistent. If the system is
// underdetermined the free variables are set to zero.
std::optional<KVec> solve(const KMat& M, const KVec& b);

// Inverse of a square matrix; nullopt when singular.
std::optional<KMat> inverse(const KMat& M);

Scalar determinant(const KMat& M);

/// Linear subspace of K^m with canonical RREF basis. Equal subspaces have
/// identical bases, so operator== is decidable equality of subspaces.
class Subspace {
public:
    static Subspace span(int ambient_dim, const std::vector<KVec>& generators,
                         const FieldPtr& f);
    static Subspace zero(int ambient_dim, const FieldPtr& f);
    static Subspace full(int ambient_dim, const FieldPtr& f);

    int ambient_dim() const { return ambient_; }
    int rank() const { return static_cast<int>(basis_.size()); }
    const std::vector<KVec>& basis() const { return basis_; }
    const std::vector<int>& pivots() const { return pivots_; }
    const FieldPtr& field() const { return field_; }

    bool is_zero() const { return basis_.empty(); }
    bool is_full() const { return rank() == ambient_; }

    bool contains(const KVec& v) const;
    bool contains_subspace(const Subspace& other) const;

    // v minus its projection onto the pivot coordinates: the canonical coset
    // representative of v modulo this subspace.
    KVec reduce(const KVec& v) const;

    bool operator==(const Subspace& o) const;
    bool operator!=(const Subspace& o) const { return !(*this == o); }

private:
    int ambient_ = 0;
    FieldPtr field_;
    std::vector<KVec> basis_;
    std::vector<int> pivots_;
};

Subspace kernel(const KMat& M);
Subspace subspace_sum(const Subspace& u, const Subspace& w);
Subspace subspace_intersect(const Subspace& u, const Subspace& w);

// Covectors annihilating every vector of u: kernel of the basis matrix.
Subspace annihilator(const Subspace& u);

/// Invertible m x m matrix whose columns generate the lattice B * Z^m.
class LatticeBasis {
public:
    explicit LatticeBasis(KMat b);
    static LatticeBasis standard(int m, const FieldPtr& f);

    int dim() const { return b_.rows(); }
    const KMat& matrix() const { return b_; }
    const KMat& inverse_matrix() const { return binv_; }
    const FieldPtr& field() const { return b_.field(); }

    KVec to_lattice_coords(const KVec& v) const;   // B^{-1} v
    KVec from_lattice_coords(const KVec& v) const; // B v

    LatticeBasis scaled(const Rat& n) const; // basis of n * Gamma

private:
    KMat b_;
    KMat binv_;
};

KVec lattice_coords(const LatticeBasis& b, const KVec& v);

/// Coset a + L in canonical form: the translate is reduced modulo L.
struct Coset {
    KVec translate;
    Subspace direction;

    bool operator==(const Coset& o) const;
};

Coset coset_reduce(const KVec& a, const Subspace& l);

// Smallest subspace containing l that admits a basis of rational vectors in
// the lattice coordinates of b.
Subspace rational_closure(const Subspace& l, const LatticeBasis& b);

// --- rational (theta-free) linear algebra -------------------------------

using QVec = std::vector<Rat>;
using QMat = std::vector<QVec>;

std::vector<int> qrref_inplace(QMat& rows);
QMat qkernel(const QMat& m, int cols);

// Canonical Hermite basis (row style) of the subgroup of Q^m generated by
// the given vectors; rows are pruned of zeros. Throws DegenerateLatticeError
// if the rank is below full.
QMat hnf_basis(const QMat& generators, int m);

// Integer-matrix core of hnf_basis; exposed for tests.
std::vector<std::vector<Int>> hnf_int(std::vector<std::vector<Int>> rows, int m);

LatticeBasis hnf_lattice(const QMat& generators, int m, const FieldPtr& f);

// Rational basis of s in the lattice coordinates of b, scaled to primitive
// integer vectors. Fails when s is not Gamma-rational.
std::vector<std::vector<Int>> integer_lattice_basis(const Subspace& s, const LatticeBasis& b);

} // namespace nilflow
