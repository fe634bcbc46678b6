#include "nilflow/qlinalg.hpp"

#include <algorithm>

namespace nilflow {

KVec kvec_zero(int n, const FieldPtr& f) {
    return KVec(static_cast<size_t>(n), Scalar::zero(f));
}

KVec kvec_add(const KVec& a, const KVec& b) {
    if (a.size() != b.size()) throw DimensionError("vector size mismatch");
    KVec r = a;
    for (size_t i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
}

KVec kvec_sub(const KVec& a, const KVec& b) {
    if (a.size() != b.size()) throw DimensionError("vector size mismatch");
    KVec r = a;
    for (size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

KVec kvec_scale(const Scalar& c, const KVec& a) {
    KVec r = a;
    for (auto& x : r) x *= c;
    return r;
}

bool kvec_is_zero(const KVec& a) {
    return std::all_of(a.begin(), a.end(), [](const Scalar& x) { return x.is_zero(); });
}

KMat::KMat(int rows, int cols, const FieldPtr& f)
    : rows_(rows), cols_(cols), field_(f),
      a_(static_cast<size_t>(rows) * cols, Scalar::zero(f)) {
    if (rows < 0 || cols < 0) throw DimensionError("negative matrix dimension");
}

KMat KMat::identity(int n, const FieldPtr& f) {
    KMat m(n, n, f);
    for (int i = 0; i < n; ++i) m.at(i, i) = Scalar::one(f);
    return m;
}

KMat KMat::from_rows(const std::vector<KVec>& rows, const FieldPtr& f) {
    int r = static_cast<int>(rows.size());
    int c = r == 0 ? 0 : static_cast<int>(rows[0].size());
    KMat m(r, c, f);
    for (int i = 0; i < r; ++i) {
        if (static_cast<int>(rows[i].size()) != c) {
            throw DimensionError("ragged row list");
        }
        for (int j = 0; j < c; ++j) m.at(i, j) = rows[i][j];
    }
    return m;
}

KVec KMat::row(int i) const {
    KVec v;
    v.reserve(cols_);
    for (int j = 0; j < cols_; ++j) v.push_back(at(i, j));
    return v;
}

KVec KMat::col(int j) const {
    KVec v;
    v.reserve(rows_);
    for (int i = 0; i < rows_; ++i) v.push_back(at(i, j));
    return v;
}

void KMat::set_row(int i, const KVec& v) {
    if (static_cast<int>(v.size()) != cols_) throw DimensionError("row size mismatch");
    for (int j = 0; j < cols_; ++j) at(i, j) = v[j];
}

KMat KMat::operator*(const KMat& o) const {
    if (cols_ != o.rows_) throw DimensionError("matrix product dimension mismatch");
    KMat r(rows_, o.cols_, field_);
    for (int i = 0; i < rows_; ++i) {
        for (int k = 0; k < cols_; ++k) {
            const Scalar& aik = at(i, k);
            if (aik.is_zero()) continue;
            for (int j = 0; j < o.cols_; ++j) {
                r.at(i, j) += aik * o.at(k, j);
            }
        }
    }
    return r;
}

KMat KMat::operator+(const KMat& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionError("matrix sum mismatch");
    KMat r = *this;
    for (size_t i = 0; i < a_.size(); ++i) r.a_[i] += o.a_[i];
    return r;
}

KMat KMat::operator-(const KMat& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionError("matrix diff mismatch");
    KMat r = *this;
    for (size_t i = 0; i < a_.size(); ++i) r.a_[i] -= o.a_[i];
    return r;
}

KVec KMat::apply(const KVec& v) const {
    if (static_cast<int>(v.size()) != cols_) throw DimensionError("matrix apply mismatch");
    KVec r = kvec_zero(rows_, field_);
    for (int i = 0; i < rows_; ++i) {
        for (int j = 0; j < cols_; ++j) {
            if (at(i, j).is_zero() || v[j].is_zero()) continue;
            r[i] += at(i, j) * v[j];
        }
    }
    return r;
}

KMat KMat::transpose() const {
    KMat r(cols_, rows_, field_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) r.at(j, i) = at(i, j);
    return r;
}

KMat KMat::scaled(const Scalar& c) const {
    KMat r = *this;
    for (auto& x : r.a_) x *= c;
    return r;
}

bool KMat::operator==(const KMat& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) return false;
    for (size_t i = 0; i < a_.size(); ++i) {
        if (a_[i] != o.a_[i]) return false;
    }
    return true;
}

std::vector<int> rref_inplace(std::vector<KVec>& rows) {
    std::vector<int> pivots;
    if (rows.empty()) return pivots;
    int n = static_cast<int>(rows[0].size());
    int r = 0;
    for (int col = 0; col < n && r < static_cast<int>(rows.size()); ++col) {
        int piv = -1;
        for (int i = r; i < static_cast<int>(rows.size()); ++i) {
            if (!rows[i][col].is_zero()) { piv = i; break; }
        }
        if (piv < 0) continue;
        std::swap(rows[r], rows[piv]);
        Scalar lead = rows[r][col];
        rows[r] = kvec_scale(lead.inv(), rows[r]);
        for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
            if (i == r || rows[i][col].is_zero()) continue;
            Scalar factor = rows[i][col];
            rows[i] = kvec_sub(rows[i], kvec_scale(factor, rows[r]));
        }
        pivots.push_back(col);
        ++r;
    }
    rows.resize(pivots.size(), KVec{});
    return pivots;
}

std::optional<KVec> solve(const KMat& M, const KVec& b) {
    if (static_cast<int>(b.size()) != M.rows()) throw DimensionError("solve: rhs size mismatch");
    std::vector<KVec> aug;
    aug.reserve(M.rows());
    for (int i = 0; i < M.rows(); ++i) {
        KVec row = M.row(i);
        row.push_back(b[i]);
        aug.push_back(std::move(row));
    }
    std::vector<int> pivots = rref_inplace(aug);
    KVec x = kvec_zero(M.cols(), M.field());
    for (size_t r = 0; r < pivots.size(); ++r) {
        if (pivots[r] == M.cols()) return std::nullopt; // pivot in augmented column
        x[pivots[r]] = aug[r][M.cols()];
    }
    return x;
}

std::optional<KMat> inverse(const KMat& M) {
    if (M.rows() != M.cols()) throw DimensionError("inverse of non-square matrix");
    int n = M.rows();
    std::vector<KVec> aug;
    aug.reserve(n);
    for (int i = 0; i < n; ++i) {
        KVec row = M.row(i);
        for (int j = 0; j < n; ++j) {
            row.push_back(i == j ? Scalar::one(M.field()) : Scalar::zero(M.field()));
        }
        aug.push_back(std::move(row));
    }
    std::vector<int> pivots = rref_inplace(aug);
    if (static_cast<int>(pivots.size()) != n || pivots.back() != n - 1) return std::nullopt;
    for (size_t r = 0; r < pivots.size(); ++r) {
        if (pivots[r] != static_cast<int>(r)) return std::nullopt;
    }
    KMat inv(n, n, M.field());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) inv.at(i, j) = aug[i][n + j];
    return inv;
}

Scalar determinant(const KMat& M) {
    if (M.rows() != M.cols()) throw DimensionError("determinant of non-square matrix");
    int n = M.rows();
    KMat a = M;
    Scalar det = Scalar::one(M.field());
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        for (int i = col; i < n; ++i) {
            if (!a.at(i, col).is_zero()) { piv = i; break; }
        }
        if (piv < 0) return Scalar::zero(M.field());
        if (piv != col) {
            for (int j = 0; j < n; ++j) std::swap(a.at(piv, j), a.at(col, j));
            det = -det;
        }
        det *= a.at(col, col);
        Scalar inv = a.at(col, col).inv();
        for (int i = col + 1; i < n; ++i) {
            if (a.at(i, col).is_zero()) continue;
            Scalar f = a.at(i, col) * inv;
            for (int j = col; j < n; ++j) {
                a.at(i, j) -= f * a.at(col, j);
            }
        }
    }
    return det;
}

Subspace Subspace::span(int ambient_dim, const std::vector<KVec>& generators,
                        const FieldPtr& f) {
    for (const auto& g : generators) {
        if (static_cast<int>(g.size()) != ambient_dim) {
            throw DimensionError("generator dimension mismatch");
        }
    }
    Subspace s;
    s.ambient_ = ambient_dim;
    s.field_ = f;
    s.basis_ = generators;
    s.pivots_ = rref_inplace(s.basis_);
    return s;
}

Subspace Subspace::zero(int ambient_dim, const FieldPtr& f) {
    return span(ambient_dim, {}, f);
}

Subspace Subspace::full(int ambient_dim, const FieldPtr& f) {
    std::vector<KVec> rows;
    for (int i = 0; i < ambient_dim; ++i) {
        KVec e = kvec_zero(ambient_dim, f);
        e[i] = Scalar::one(f);
        rows.push_back(std::move(e));
    }
    return span(ambient_dim, rows, f);
}

KVec Subspace::reduce(const KVec& v) const {
    if (static_cast<int>(v.size()) != ambient_) throw DimensionError("reduce dimension mismatch");
    KVec r = v;
    for (size_t k = 0; k < basis_.size(); ++k) {
        const Scalar& c = r[pivots_[k]];
        if (c.is_zero()) continue;
        r = kvec_sub(r, kvec_scale(c, basis_[k]));
    }
    return r;
}

bool Subspace::contains(const KVec& v) const {
    return kvec_is_zero(reduce(v));
}

bool Subspace::contains_subspace(const Subspace& other) const {
    if (other.ambient_ != ambient_) throw DimensionError("subspace ambient mismatch");
    for (const auto& b : other.basis_) {
        if (!contains(b)) return false;
    }
    return true;
}

bool Subspace::operator==(const Subspace& o) const {
    if (ambient_ != o.ambient_ || pivots_ != o.pivots_) return false;
    for (size_t i = 0; i < basis_.size(); ++i) {
        for (size_t j = 0; j < basis_[i].size(); ++j) {
            if (basis_[i][j] != o.basis_[i][j]) return false;
        }
    }
    return true;
}

Subspace kernel(const KMat& M) {
    KMat a = M;
    std::vector<KVec> rows;
    rows.reserve(a.rows());
    for (int i = 0; i < a.rows(); ++i) rows.push_back(a.row(i));
    std::vector<int> pivots = rref_inplace(rows);
    std::vector<bool> is_pivot(M.cols(), false);
    for (int p : pivots) is_pivot[p] = true;
    std::vector<KVec> basis;
    for (int j = 0; j < M.cols(); ++j) {
        if (is_pivot[j]) continue;
        KVec v = kvec_zero(M.cols(), M.field());
        v[j] = Scalar::one(M.field());
        for (size_t r = 0; r < pivots.size(); ++r) {
            v[pivots[r]] = -rows[r][j];
        }
        basis.push_back(std::move(v));
    }
    return Subspace::span(M.cols(), basis, M.field());
}

Subspace subspace_sum(const Subspace& u, const Subspace& w) {
    if (u.ambient_dim() != w.ambient_dim()) throw DimensionError("sum ambient mismatch");
    std::vector<KVec> gens = u.basis();
    gens.insert(gens.end(), w.basis().begin(), w.basis().end());
    return Subspace::span(u.ambient_dim(), gens, u.field());
}

Subspace annihilator(const Subspace& u) {
    KMat rows = KMat::from_rows(u.basis(), u.field());
    if (u.rank() == 0) return Subspace::full(u.ambient_dim(), u.field());
    if (rows.cols() != u.ambient_dim()) {
        rows = KMat(0, u.ambient_dim(), u.field());
    }
    return kernel(rows);
}

Subspace subspace_intersect(const Subspace& u, const Subspace& w) {
    if (u.ambient_dim() != w.ambient_dim()) throw DimensionError("intersect ambient mismatch");
    Subspace au = annihilator(u);
    Subspace aw = annihilator(w);
    std::vector<KVec> stacked = au.basis();
    stacked.insert(stacked.end(), aw.basis().begin(), aw.basis().end());
    if (stacked.empty()) return Subspace::full(u.ambient_dim(), u.field());
    return kernel(KMat::from_rows(stacked, u.field()));
}

LatticeBasis::LatticeBasis(KMat b) : b_(std::move(b)), binv_(1, 1, b_.field()) {
    if (b_.rows() != b_.cols()) throw DimensionError("lattice basis must be square");
    auto inv = inverse(b_);
    if (!inv) throw DegenerateLatticeError("lattice basis is singular");
    binv_ = std::move(*inv);
}

LatticeBasis LatticeBasis::standard(int m, const FieldPtr& f) {
    return LatticeBasis(KMat::identity(m, f));
}

KVec LatticeBasis::to_lattice_coords(const KVec& v) const {
    return binv_.apply(v);
}

KVec LatticeBasis::from_lattice_coords(const KVec& v) const {
    return b_.apply(v);
}

LatticeBasis LatticeBasis::scaled(const Rat& n) const {
    if (n == 0) throw DegenerateLatticeError("lattice scale must be nonzero");
    return LatticeBasis(b_.scaled(Scalar(field(), n)));
}

KVec lattice_coords(const LatticeBasis& b, const KVec& v) {
    return b.to_lattice_coords(v);
}

bool Coset::operator==(const Coset& o) const {
    if (!(direction == o.direction)) return false;
    if (translate.size() != o.translate.size()) return false;
    for (size_t i = 0; i < translate.size(); ++i) {
        if (translate[i] != o.translate[i]) return false;
    }
    return true;
}

Coset coset_reduce(const KVec& a, const Subspace& l) {
    return Coset{l.reduce(a), l};
}

Subspace rational_closure(const Subspace& l, const LatticeBasis& b) {
    if (l.ambient_dim() != b.dim()) throw DimensionError("closure ambient mismatch");
    const FieldPtr& f = l.field();
    int m = l.ambient_dim();
    int d = f->degree();
    if (l.rank() == 0) return l;

    // Expand each basis vector, in lattice coordinates, into d rational rows.
    QMat constraints;
    for (const auto& u : l.basis()) {
        KVec w = b.to_lattice_coords(u);
        for (int k = 0; k < d; ++k) {
            QVec row(m);
            bool nonzero = false;
            for (int j = 0; j < m; ++j) {
                row[j] = w[j].coeffs()[k];
                if (row[j] != 0) nonzero = true;
            }
            if (nonzero) constraints.push_back(std::move(row));
        }
    }
    // Rational covectors annihilating the lattice-coordinate image of l.
    QMat ann = qkernel(constraints, m);
    // The closure, in lattice coordinates, is the kernel of the annihilators.
    std::vector<KVec> ann_rows;
    for (const auto& phi : ann) {
        KVec r;
        r.reserve(m);
        for (const auto& q : phi) r.emplace_back(f, q);
        ann_rows.push_back(std::move(r));
    }
    Subspace closure_lat = ann_rows.empty()
        ? Subspace::full(m, f)
        : kernel(KMat::from_rows(ann_rows, f));
    std::vector<KVec> ambient_basis;
    for (const auto& v : closure_lat.basis()) {
        ambient_basis.push_back(b.from_lattice_coords(v));
    }
    return Subspace::span(m, ambient_basis, f);
}

std::vector<int> qrref_inplace(QMat& rows) {
    std::vector<int> pivots;
    if (rows.empty()) return pivots;
    int n = static_cast<int>(rows[0].size());
    int r = 0;
    for (int col = 0; col < n && r < static_cast<int>(rows.size()); ++col) {
        int piv = -1;
        for (int i = r; i < static_cast<int>(rows.size()); ++i) {
            if (rows[i][col] != 0) { piv = i; break; }
        }
        if (piv < 0) continue;
        std::swap(rows[r], rows[piv]);
        Rat lead = rows[r][col];
        for (auto& x : rows[r]) x /= lead;
        for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
            if (i == r || rows[i][col] == 0) continue;
            Rat fct = rows[i][col];
            for (int j = 0; j < n; ++j) rows[i][j] -= fct * rows[r][j];
        }
        pivots.push_back(col);
        ++r;
    }
    rows.resize(pivots.size());
    return pivots;
}

QMat qkernel(const QMat& m, int cols) {
    QMat rows = m;
    std::vector<int> pivots = qrref_inplace(rows);
    std::vector<bool> is_pivot(cols, false);
    for (int p : pivots) is_pivot[p] = true;
    QMat basis;
    for (int j = 0; j < cols; ++j) {
        if (is_pivot[j]) continue;
        QVec v(cols, Rat(0));
        v[j] = 1;
        for (size_t r = 0; r < pivots.size(); ++r) {
            v[pivots[r]] = -rows[r][j];
        }
        basis.push_back(std::move(v));
    }
    return basis;
}

std::vector<std::vector<Int>> hnf_int(std::vector<std::vector<Int>> rows, int m) {
    // Row-style Hermite normal form: pivots positive, entries above each
    // pivot reduced into [0, pivot).
    int r = 0;
    for (int col = 0; col < m && r < static_cast<int>(rows.size()); ++col) {
        // Euclid on the column entries below r.
        while (true) {
            int best = -1;
            for (int i = r; i < static_cast<int>(rows.size()); ++i) {
                if (rows[i][col] == 0) continue;
                if (best < 0 || abs(rows[i][col]) < abs(rows[best][col])) best = i;
            }
            if (best < 0) break;
            std::swap(rows[r], rows[best]);
            bool cleared = true;
            for (int i = r + 1; i < static_cast<int>(rows.size()); ++i) {
                if (rows[i][col] == 0) continue;
                Int q = rows[i][col] / rows[r][col]; // truncated division
                for (int j = 0; j < m; ++j) rows[i][j] -= q * rows[r][j];
                if (rows[i][col] != 0) cleared = false;
            }
            if (cleared) break;
        }
        if (rows[r][col] == 0) continue;
        if (rows[r][col] < 0) {
            for (int j = 0; j < m; ++j) rows[r][j] = -rows[r][j];
        }
        for (int i = 0; i < r; ++i) {
            // floor division so the residue lands in [0, pivot)
            Int q = rows[i][col] / rows[r][col];
            if (rows[i][col] - q * rows[r][col] < 0) q -= 1;
            if (q != 0) {
                for (int j = 0; j < m; ++j) rows[i][j] -= q * rows[r][j];
            }
        }
        ++r;
    }
    rows.resize(r);
    return rows;
}

QMat hnf_basis(const QMat& generators, int m) {
    for (const auto& g : generators) {
        if (static_cast<int>(g.size()) != m) throw DimensionError("generator dimension mismatch");
    }
    Int lcm = 1;
    for (const auto& g : generators) {
        for (const auto& q : g) lcm = boost::multiprecision::lcm(lcm, denominator(q));
    }
    std::vector<std::vector<Int>> zrows;
    for (const auto& g : generators) {
        std::vector<Int> row(m);
        bool nonzero = false;
        for (int j = 0; j < m; ++j) {
            row[j] = numerator(g[j] * Rat(lcm));
            if (row[j] != 0) nonzero = true;
        }
        if (nonzero) zrows.push_back(std::move(row));
    }
    auto h = hnf_int(std::move(zrows), m);
    if (static_cast<int>(h.size()) < m) {
        throw DegenerateLatticeError("generators span a rank-deficient subgroup");
    }
    QMat result;
    for (const auto& row : h) {
        QVec qrow(m);
        for (int j = 0; j < m; ++j) qrow[j] = make_rat(row[j], lcm);
        result.push_back(std::move(qrow));
    }
    return result;
}

LatticeBasis hnf_lattice(const QMat& generators, int m, const FieldPtr& f) {
    QMat basis = hnf_basis(generators, m);
    KMat b(m, m, f);
    // HNF rows become the columns of the lattice basis matrix.
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            b.at(j, i) = Scalar(f, basis[i][j]);
        }
    }
    return LatticeBasis(std::move(b));
}

std::vector<std::vector<Int>> integer_lattice_basis(const Subspace& s, const LatticeBasis& b) {
    // Re-canonicalize in lattice coordinates: the RREF of a subspace with a
    // rational spanning set is entrywise rational, while B^{-1} applied to
    // the ambient RREF rows need not be.
    std::vector<KVec> lat_rows;
    for (const auto& v : s.basis()) lat_rows.push_back(b.to_lattice_coords(v));
    Subspace s_lat = Subspace::span(b.dim(), lat_rows, s.field());
    std::vector<std::vector<Int>> result;
    for (const auto& w : s_lat.basis()) {
        QVec q(w.size());
        for (size_t j = 0; j < w.size(); ++j) {
            if (!w[j].is_rational()) {
                throw Error("subspace is not rational in lattice coordinates");
            }
            q[j] = w[j].rational_value();
        }
        Int lcm = 1;
        for (const auto& x : q) lcm = boost::multiprecision::lcm(lcm, denominator(x));
        std::vector<Int> z(q.size());
        Int g = 0;
        for (size_t j = 0; j < q.size(); ++j) {
            z[j] = numerator(q[j] * Rat(lcm));
            g = boost::multiprecision::gcd(g, z[j]);
        }
        if (g > 1) {
            for (auto& x : z) x /= g;
        }
        result.push_back(std::move(z));
    }
    return result;
}

} // namespace nilflow
