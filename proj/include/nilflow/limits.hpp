#pragma once

#include <variant>
#include <vector>

#include "nilflow/unipotent.hpp"

namespace nilflow {

/// Vector-valued polynomial p(t) = sum t^i coeffs[i], coeffs[0] the constant
/// term. Proper means the constant term vanishes.
struct PolyVec {
    int dim = 0;
    std::vector<KVec> coeffs; // by ascending degree; may be empty (zero map)

    int degree() const;
    bool is_proper() const;
    KVec coeff(int i) const; // zero vector beyond stored degree
    KVec eval(const Scalar& t) const;
    PolyVec operator-(const PolyVec& o) const;
};

/// Proper polynomial dilation family rho_t(x) = sum t^i A_i x. The constant
/// term is unrepresentable, so properness holds by construction.
struct DilationFamily {
    int out_dim = 0;
    int in_dim = 0;
    std::vector<KMat> mats; // degree 1..d

    int degree() const { return static_cast<int>(mats.size()); }
    const KMat& mat(int i) const { return mats[static_cast<size_t>(i) - 1]; }
    PolyVec orbit(const KVec& x) const; // p(t) = sum t^i A_i x, proper
};

struct FinitePoints {
    std::vector<KVec> points;
};

struct Polytope {
    std::vector<KVec> vertices; // the convex hull of these
};

using InputPiece = std::variant<FinitePoints, Polytope>;

struct InputSet {
    std::vector<InputPiece> pieces;
};

int piece_dim(const InputPiece& piece);
std::vector<KVec> piece_vertices(const InputPiece& piece);

/// One translated subspace p_j(t) + L_j; the translate's coefficient vectors
/// are stored reduced modulo L_j, so equal coset families compare equal.
struct CosetCurve {
    PolyVec translate;
    Subspace direction;
};

struct MultiCosetFamily {
    int ambient = 0;
    std::vector<CosetCurve> cosets;

    int size() const { return static_cast<int>(cosets.size()); }
};

/// Fully resolved limit data over a fixed lattice: closures of the L_j, and
/// the coset cbar + Vclosed of allowed translate tuples in (K^m)^n.
struct LimitFamily {
    LatticeBasis lattice;
    std::vector<Subspace> closures; // parallel to the coset list
    KVec cbar;                      // in K^{m*n}; zero for proper families
    Subspace vclosed;               // Gamma^n-rational closure of V
    int n = 0;
};

enum class Convergence { ConvergesStronglyToFull, NotFull };

const char* convergence_name(Convergence c);

// Multi-coset normal form of a proper dilation applied to an input set:
// one coset per finite point, one per polytope piece; ends with compress().
MultiCosetFamily normal_form(const DilationFamily& dil, const InputSet& x);

// Drops coset j whenever some other coset k absorbs it exactly
// (L_j inside L_k and all coefficients of p_j - p_k inside L_k).
MultiCosetFamily compress(const MultiCosetFamily& m);

// Inclusion-maximal directions among the L_j, deduplicated.
std::vector<Subspace> slmax(const MultiCosetFamily& m);

// Stacks the translates into one curve sigma(t) in K^{m*n} and returns its
// nearest-coset data: constant term cbar and V = span of higher coefficients.
std::pair<KVec, Subspace> curve_coset(const MultiCosetFamily& m);

LimitFamily limit_family(const MultiCosetFamily& m, const LatticeBasis& b);

Convergence classify_convergence(const MultiCosetFamily& m, const LatticeBasis& b);

// Pushes a dilation family in the Lie algebra through d(pi_ab).
DilationFamily abelianize_dilation(const DilationFamily& dil, const SpecPtr& spec);

/// Limit data of a translate family a(t) + C: the limit sets are
/// pi(d + C) for d in cbar + V^Gamma.
struct TranslatedBodyLimits {
    KVec cbar;
    Subspace v;
    Subspace vclosed;
};

TranslatedBodyLimits translated_body_limits(const PolyVec& a, const LatticeBasis& b);

// Block-diagonal lattice for Gamma^n in (K^m)^n.
LatticeBasis power_lattice(const LatticeBasis& b, int n);

} // namespace nilflow
