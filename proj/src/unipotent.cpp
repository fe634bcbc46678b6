#include "nilflow/unipotent.hpp"

namespace nilflow {

namespace {

bool is_strictly_upper(const KMat& a) {
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j <= i && j < a.cols(); ++j) {
            if (!a.at(i, j).is_zero()) return false;
        }
    }
    return true;
}

bool is_unipotent_shape(const KMat& m) {
    if (m.rows() != m.cols()) return false;
    Scalar one = Scalar::one(m.field());
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < i; ++j) {
            if (!m.at(i, j).is_zero()) return false;
        }
        if (m.at(i, i) != one) return false;
    }
    return true;
}

KVec flatten(const KMat& a) {
    KVec v;
    v.reserve(static_cast<size_t>(a.rows()) * a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) v.push_back(a.at(i, j));
    return v;
}

KMat bracket(const KMat& a, const KMat& b) {
    return a * b - b * a;
}

} // namespace

SpecPtr UnipotentGroupSpec::make(int n, std::vector<KMat> algebra_basis,
                                 const FieldPtr& f, std::string name) {
    auto spec = std::shared_ptr<UnipotentGroupSpec>(new UnipotentGroupSpec());
    spec->n_ = n;
    spec->field_ = f;
    spec->name_ = std::move(name);
    for (const auto& b : algebra_basis) {
        if (b.rows() != n || b.cols() != n) {
            throw DimensionError("algebra basis matrix size mismatch");
        }
        if (!is_strictly_upper(b)) {
            throw ScenarioError("algebra basis matrices must be strictly upper triangular");
        }
    }
    spec->basis_ = std::move(algebra_basis);

    // RREF of the flattened basis: membership tests and coordinate solving.
    std::vector<KVec> flat;
    for (const auto& b : spec->basis_) flat.push_back(flatten(b));
    std::vector<KVec> rref_rows = flat;
    spec->flat_pivots_ = rref_inplace(rref_rows);
    spec->flat_rref_ = std::move(rref_rows);
    if (static_cast<int>(spec->flat_pivots_.size()) != spec->dim()) {
        throw ScenarioError("algebra basis matrices must be linearly independent");
    }

    // Bracket closure.
    for (size_t i = 0; i < spec->basis_.size(); ++i) {
        for (size_t j = i + 1; j < spec->basis_.size(); ++j) {
            if (!spec->algebra_contains(bracket(spec->basis_[i], spec->basis_[j]))) {
                throw ScenarioError("algebra basis span is not closed under the bracket");
            }
        }
    }
    return spec;
}

SpecPtr UnipotentGroupSpec::abelian(int m, const FieldPtr& f) {
    // R^m realized on the top row of an (m+1) x (m+1) unipotent group.
    std::vector<KMat> basis;
    for (int i = 0; i < m; ++i) {
        KMat e(m + 1, m + 1, f);
        e.at(0, i + 1) = Scalar::one(f);
        basis.push_back(std::move(e));
    }
    return make(m + 1, std::move(basis), f, "abelian:" + std::to_string(m));
}

SpecPtr UnipotentGroupSpec::heisenberg3(const FieldPtr& f) {
    // coords (a, b, c) <-> entries (0,1), (1,2), (0,2)
    KMat x(3, 3, f), y(3, 3, f), z(3, 3, f);
    x.at(0, 1) = Scalar::one(f);
    y.at(1, 2) = Scalar::one(f);
    z.at(0, 2) = Scalar::one(f);
    return make(3, {x, y, z}, f, "heisenberg3");
}

SpecPtr UnipotentGroupSpec::full_un(int n, const FieldPtr& f) {
    std::vector<KMat> basis;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            KMat e(n, n, f);
            e.at(i, j) = Scalar::one(f);
            basis.push_back(std::move(e));
        }
    }
    return make(n, std::move(basis), f, "full_un:" + std::to_string(n));
}

bool UnipotentGroupSpec::is_abelian() const {
    for (size_t i = 0; i < basis_.size(); ++i) {
        for (size_t j = i + 1; j < basis_.size(); ++j) {
            KMat br = bracket(basis_[i], basis_[j]);
            if (!kvec_is_zero(flatten(br))) return false;
        }
    }
    return true;
}

KMat UnipotentGroupSpec::algebra_matrix(const KVec& coords) const {
    if (static_cast<int>(coords.size()) != dim()) {
        throw DimensionError("algebra coordinate count mismatch");
    }
    KMat a(n_, n_, field_);
    for (int k = 0; k < dim(); ++k) {
        if (coords[k].is_zero()) continue;
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) {
                if (!basis_[k].at(i, j).is_zero()) {
                    a.at(i, j) += coords[k] * basis_[k].at(i, j);
                }
            }
    }
    return a;
}

KVec UnipotentGroupSpec::algebra_coords(const KMat& a) const {
    if (a.rows() != n_ || a.cols() != n_) throw DimensionError("algebra element size mismatch");
    // Solve sum x_k basis_k = a by reducing flatten(a) against the RREF rows
    // while tracking coefficients through the original basis.
    KMat cols(n_ * n_, dim(), field_);
    for (int k = 0; k < dim(); ++k) {
        KVec fb = flatten(basis_[k]);
        for (int r = 0; r < n_ * n_; ++r) cols.at(r, k) = fb[r];
    }
    auto x = solve(cols, flatten(a));
    if (!x) throw ScenarioError("matrix is not in the span of the algebra basis");
    return *x;
}

bool UnipotentGroupSpec::algebra_contains(const KMat& a) const {
    KVec v = flatten(a);
    for (size_t k = 0; k < flat_rref_.size(); ++k) {
        const Scalar& c = v[flat_pivots_[k]];
        if (c.is_zero()) continue;
        v = kvec_sub(v, kvec_scale(c, flat_rref_[k]));
    }
    return kvec_is_zero(v);
}

GroupElement::GroupElement(SpecPtr spec, KMat matrix)
    : spec_(std::move(spec)), m_(std::move(matrix)) {
    if (m_.rows() != spec_->matrix_size() || m_.cols() != spec_->matrix_size()) {
        throw DimensionError("group element size mismatch");
    }
    if (!is_unipotent_shape(m_)) {
        throw ScenarioError("group element must be upper triangular with unit diagonal");
    }
}

GroupElement mul(const GroupElement& g, const GroupElement& h) {
    if (g.spec() != h.spec() && g.spec()->name() != h.spec()->name()) {
        throw DomainMismatchError("group elements from different specs");
    }
    return GroupElement(g.spec(), g.matrix() * h.matrix());
}

GroupElement inv(const GroupElement& g) {
    // (I + N)^{-1} = sum (-N)^k, nilpotent N
    int n = g.matrix().rows();
    const FieldPtr& f = g.matrix().field();
    KMat nmat = g.matrix() - KMat::identity(n, f);
    KMat acc = KMat::identity(n, f);
    KMat pw = KMat::identity(n, f);
    for (int k = 1; k < n; ++k) {
        pw = pw * nmat;
        acc = (k % 2 == 1) ? acc - pw : acc + pw;
    }
    return GroupElement(g.spec(), acc);
}

KMat exp_matrix(const KMat& a) {
    if (a.rows() != a.cols()) throw DimensionError("exp of non-square matrix");
    if (!is_strictly_upper(a)) throw ScenarioError("exp requires a strictly upper triangular matrix");
    int n = a.rows();
    const FieldPtr& f = a.field();
    KMat acc = KMat::identity(n, f);
    KMat pw = KMat::identity(n, f);
    Rat fact(1);
    for (int k = 1; k < n; ++k) {
        pw = pw * a;
        fact *= k;
        acc = acc + pw.scaled(Scalar(f, Rat(1) / fact));
    }
    return acc;
}

KMat log_matrix(const KMat& g) {
    if (!is_unipotent_shape(g)) throw ScenarioError("log requires a unipotent matrix");
    int n = g.rows();
    const FieldPtr& f = g.field();
    KMat nmat = g - KMat::identity(n, f);
    KMat acc(n, n, f);
    KMat pw = KMat::identity(n, f);
    for (int k = 1; k < n; ++k) {
        pw = pw * nmat;
        Rat c = make_rat(k % 2 == 1 ? 1 : -1, k);
        acc = acc + pw.scaled(Scalar(f, c));
    }
    return acc;
}

GroupElement exp_elem(const SpecPtr& spec, const KVec& coords) {
    return GroupElement(spec, exp_matrix(spec->algebra_matrix(coords)));
}

KVec log_elem(const GroupElement& g) {
    return g.spec()->algebra_coords(log_matrix(g.matrix()));
}

Subspace commutator_subalgebra(const SpecPtr& spec) {
    std::vector<KVec> gens;
    const auto& basis = spec->algebra_basis();
    for (size_t i = 0; i < basis.size(); ++i) {
        for (size_t j = i + 1; j < basis.size(); ++j) {
            KMat br = basis[i] * basis[j] - basis[j] * basis[i];
            gens.push_back(spec->algebra_coords(br));
        }
    }
    return Subspace::span(spec->dim(), gens, spec->field());
}

Abelianization abelianization(const SpecPtr& spec) {
    Subspace comm = commutator_subalgebra(spec);
    int dim = spec->dim();
    std::vector<bool> is_pivot(dim, false);
    for (int p : comm.pivots()) is_pivot[p] = true;
    std::vector<int> free_cols;
    for (int j = 0; j < dim; ++j) {
        if (!is_pivot[j]) free_cols.push_back(j);
    }
    int m_ab = static_cast<int>(free_cols.size());
    KMat dpi(m_ab, dim, spec->field());
    for (int i = 0; i < dim; ++i) {
        KVec e = kvec_zero(dim, spec->field());
        e[i] = Scalar::one(spec->field());
        KVec red = comm.reduce(e);
        for (int r = 0; r < m_ab; ++r) {
            dpi.at(r, i) = red[free_cols[r]];
        }
    }
    return Abelianization{m_ab, dpi};
}

LatticeBasis project_lattice(const GroupLattice& gamma, const SpecPtr& spec) {
    Abelianization ab = abelianization(spec);
    QMat gens;
    for (const auto& g : gamma.generators) {
        KVec w = ab.dpi.apply(log_elem(g));
        QVec q(w.size());
        for (size_t j = 0; j < w.size(); ++j) {
            if (!w[j].is_rational()) {
                throw UnsupportedLatticeError(
                    "projected lattice generator has an irrational coordinate");
            }
            q[j] = w[j].rational_value();
        }
        gens.push_back(std::move(q));
    }
    return hnf_lattice(gens, ab.m_ab, spec->field());
}

} // namespace nilflow
