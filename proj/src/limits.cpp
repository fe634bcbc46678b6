#include "nilflow/limits.hpp"

#include <algorithm>

namespace nilflow {

int PolyVec::degree() const {
    for (size_t i = coeffs.size(); i > 0; --i) {
        if (!kvec_is_zero(coeffs[i - 1])) return static_cast<int>(i - 1);
    }
    return -1;
}

bool PolyVec::is_proper() const {
    return coeffs.empty() || kvec_is_zero(coeffs[0]);
}

KVec PolyVec::coeff(int i) const {
    if (i < 0 || i >= static_cast<int>(coeffs.size())) {
        FieldPtr f = coeffs.empty() ? NumberField::rationals() : coeffs[0][0].field();
        return kvec_zero(dim, f);
    }
    return coeffs[static_cast<size_t>(i)];
}

KVec PolyVec::eval(const Scalar& t) const {
    FieldPtr f = t.field();
    if (!coeffs.empty() && !coeffs[0].empty()) f = coeffs[0][0].field();
    KVec acc = kvec_zero(dim, f);
    for (size_t i = coeffs.size(); i > 0; --i) {
        acc = kvec_scale(t, acc);
        acc = kvec_add(acc, coeffs[i - 1]);
    }
    return acc;
}

PolyVec PolyVec::operator-(const PolyVec& o) const {
    if (dim != o.dim) throw DimensionError("poly vec dimension mismatch");
    PolyVec r;
    r.dim = dim;
    size_t deg = std::max(coeffs.size(), o.coeffs.size());
    for (size_t i = 0; i < deg; ++i) {
        r.coeffs.push_back(kvec_sub(coeff(static_cast<int>(i)), o.coeff(static_cast<int>(i))));
    }
    return r;
}

PolyVec DilationFamily::orbit(const KVec& x) const {
    if (static_cast<int>(x.size()) != in_dim) throw DimensionError("dilation input dimension mismatch");
    PolyVec p;
    p.dim = out_dim;
    FieldPtr f = mats.empty() ? NumberField::rationals() : mats[0].field();
    p.coeffs.push_back(kvec_zero(out_dim, f)); // proper: zero constant term
    for (const auto& a : mats) {
        p.coeffs.push_back(a.apply(x));
    }
    return p;
}

int piece_dim(const InputPiece& piece) {
    return static_cast<int>(piece_vertices(piece)[0].size());
}

std::vector<KVec> piece_vertices(const InputPiece& piece) {
    if (std::holds_alternative<FinitePoints>(piece)) {
        return std::get<FinitePoints>(piece).points;
    }
    return std::get<Polytope>(piece).vertices;
}

const char* convergence_name(Convergence c) {
    return c == Convergence::ConvergesStronglyToFull ? "ConvergesStronglyToFull" : "NotFull";
}

namespace {

// Reduce every coefficient vector of p modulo l; keeps p(t) + L pointwise
// equal for every t because the reduction subtracts elements of L.
PolyVec reduce_translate(const PolyVec& p, const Subspace& l) {
    PolyVec r;
    r.dim = p.dim;
    for (const auto& c : p.coeffs) {
        r.coeffs.push_back(l.reduce(c));
    }
    return r;
}

} // namespace

MultiCosetFamily normal_form(const DilationFamily& dil, const InputSet& x) {
    if (x.pieces.empty()) throw ScenarioError("input set must be nonempty");
    const FieldPtr& f = dil.mats.empty() ? NumberField::rationals() : dil.mats[0].field();
    MultiCosetFamily m;
    m.ambient = dil.out_dim;
    for (const auto& piece : x.pieces) {
        if (piece_dim(piece) != dil.in_dim) {
            throw DimensionError("input piece dimension does not match dilation");
        }
        if (std::holds_alternative<FinitePoints>(piece)) {
            for (const auto& pt : std::get<FinitePoints>(piece).points) {
                CosetCurve c;
                c.direction = Subspace::zero(dil.out_dim, f);
                c.translate = reduce_translate(dil.orbit(pt), c.direction);
                m.cosets.push_back(std::move(c));
            }
        } else {
            const auto& verts = std::get<Polytope>(piece).vertices;
            if (verts.empty()) throw ScenarioError("polytope piece has no vertices");
            // rho_t is affine on the hull, so differences of vertex images
            // span a subspace containing rho_t(piece) - rho_t(v0).
            std::vector<KVec> dirs;
            for (int i = 1; i <= dil.degree(); ++i) {
                for (size_t s = 0; s < verts.size(); ++s) {
                    for (size_t u = s + 1; u < verts.size(); ++u) {
                        dirs.push_back(dil.mat(i).apply(kvec_sub(verts[s], verts[u])));
                    }
                }
            }
            CosetCurve c;
            c.direction = Subspace::span(dil.out_dim, dirs, f);
            c.translate = reduce_translate(dil.orbit(verts[0]), c.direction);
            m.cosets.push_back(std::move(c));
        }
    }
    return compress(m);
}

namespace {

bool absorbs(const CosetCurve& k, const CosetCurve& j) {
    if (!k.direction.contains_subspace(j.direction)) return false;
    PolyVec diff = j.translate - k.translate;
    for (const auto& c : diff.coeffs) {
        if (!k.direction.contains(c)) return false;
    }
    return true;
}

} // namespace

MultiCosetFamily compress(const MultiCosetFamily& m) {
    int n = m.size();
    std::vector<bool> dropped(n, false);
    for (int j = 0; j < n; ++j) {
        // scan in input order; absorb into the first eligible surviving k
        for (int k = 0; k < n; ++k) {
            if (k == j || dropped[k]) continue;
            if (absorbs(m.cosets[k], m.cosets[j])) {
                dropped[j] = true;
                break;
            }
        }
    }
    MultiCosetFamily r;
    r.ambient = m.ambient;
    for (int j = 0; j < n; ++j) {
        if (!dropped[j]) r.cosets.push_back(m.cosets[j]);
    }
    return r;
}

std::vector<Subspace> slmax(const MultiCosetFamily& m) {
    std::vector<Subspace> result;
    for (int j = 0; j < m.size(); ++j) {
        const Subspace& lj = m.cosets[j].direction;
        bool maximal = true;
        for (int k = 0; k < m.size(); ++k) {
            if (k == j) continue;
            const Subspace& lk = m.cosets[k].direction;
            if (lk.contains_subspace(lj) && !(lk == lj)) { maximal = false; break; }
            if (k < j && lk == lj) { maximal = false; break; } // dedup, keep first
        }
        if (maximal && std::find(result.begin(), result.end(), lj) == result.end()) {
            result.push_back(lj);
        }
    }
    return result;
}

std::pair<KVec, Subspace> curve_coset(const MultiCosetFamily& m) {
    int n = m.size();
    int mm = m.ambient;
    FieldPtr f = NumberField::rationals();
    if (n > 0 && m.cosets[0].direction.field()) f = m.cosets[0].direction.field();
    int stacked_dim = mm * n;
    int max_deg = 0;
    for (const auto& c : m.cosets) max_deg = std::max(max_deg, c.translate.degree());

    KVec cbar = kvec_zero(stacked_dim, f);
    std::vector<KVec> v_gens;
    for (int i = 0; i <= max_deg; ++i) {
        KVec stacked = kvec_zero(stacked_dim, f);
        bool nonzero = false;
        for (int j = 0; j < n; ++j) {
            KVec cj = m.cosets[j].translate.coeff(i);
            for (int a = 0; a < mm; ++a) {
                stacked[static_cast<size_t>(j) * mm + a] = cj[a];
                if (!cj[a].is_zero()) nonzero = true;
            }
        }
        if (i == 0) {
            cbar = stacked;
        } else if (nonzero) {
            v_gens.push_back(stacked);
        }
    }
    return {cbar, Subspace::span(stacked_dim, v_gens, f)};
}

LatticeBasis power_lattice(const LatticeBasis& b, int n) {
    int m = b.dim();
    KMat big(m * n, m * n, b.field());
    for (int blk = 0; blk < n; ++blk) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                big.at(blk * m + i, blk * m + j) = b.matrix().at(i, j);
            }
    }
    return LatticeBasis(std::move(big));
}

LimitFamily limit_family(const MultiCosetFamily& m, const LatticeBasis& b) {
    if (m.ambient != b.dim()) throw DimensionError("limit family ambient mismatch");
    std::vector<Subspace> closures;
    for (const auto& c : m.cosets) {
        closures.push_back(rational_closure(c.direction, b));
    }
    auto [cbar, v] = curve_coset(m);
    Subspace vclosed = m.size() > 0
        ? rational_closure(v, power_lattice(b, m.size()))
        : v;
    return LimitFamily{b, std::move(closures), std::move(cbar), std::move(vclosed), m.size()};
}

Convergence classify_convergence(const MultiCosetFamily& m, const LatticeBasis& b) {
    for (const auto& l : slmax(m)) {
        if (rational_closure(l, b).is_full()) {
            return Convergence::ConvergesStronglyToFull;
        }
    }
    return Convergence::NotFull;
}

DilationFamily abelianize_dilation(const DilationFamily& dil, const SpecPtr& spec) {
    if (dil.out_dim != spec->dim()) {
        throw DimensionError("dilation rows must equal the algebra dimension");
    }
    Abelianization ab = abelianization(spec);
    DilationFamily r;
    r.out_dim = ab.m_ab;
    r.in_dim = dil.in_dim;
    for (const auto& a : dil.mats) {
        r.mats.push_back(ab.dpi * a);
    }
    return r;
}

TranslatedBodyLimits translated_body_limits(const PolyVec& a, const LatticeBasis& b) {
    if (a.dim != b.dim()) throw DimensionError("translate dimension mismatch");
    FieldPtr f = b.field();
    KVec cbar = a.coeffs.empty() ? kvec_zero(a.dim, f) : a.coeffs[0];
    std::vector<KVec> gens;
    for (size_t i = 1; i < a.coeffs.size(); ++i) {
        gens.push_back(a.coeffs[i]);
    }
    Subspace v = Subspace::span(a.dim, gens, f);
    return TranslatedBodyLimits{cbar, v, rational_closure(v, b)};
}

} // namespace nilflow
