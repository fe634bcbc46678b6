#include "nilflow/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <random>
#include <functional>
#include <limits>
#include <thread>

namespace nilflow {

int worker_count() {
    if (const char* env = std::getenv("NILFLOW_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

namespace {

// Chunked parallel map; f(begin, end) must be independent across chunks.
template <class F>
void parallel_chunks(std::size_t count, const F& f) {
    int workers = worker_count();
    if (workers <= 1 || count < 2048) {
        f(std::size_t(0), count);
        return;
    }
    std::size_t chunk = (count + workers - 1) / workers;
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk;
        if (lo >= count) break;
        std::size_t hi = std::min(count, lo + chunk);
        threads.emplace_back([&, lo, hi] { f(lo, hi); });
    }
    for (auto& th : threads) th.join();
}

double frac01(double x) {
    double f = x - std::floor(x);
    if (f >= 1.0) f = 0.0; // guard against rounding at the seam
    return f;
}

bool is_prime(std::size_t n) {
    if (n < 2) return false;
    for (std::size_t d = 2; d * d <= n; ++d) {
        if (n % d == 0) return false;
    }
    return true;
}

// Smallest prime >= n; prime strides avoid resonance between uniform
// parameter grids and integer dilation parameters.
std::size_t next_prime(std::size_t n) {
    while (!is_prime(n)) ++n;
    return n;
}

double wall_ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

} // namespace

Schedule Schedule::geometric(double from, double to, int steps_per_decade) {
    if (from <= 0 || to <= from || steps_per_decade < 1) {
        throw ScenarioError("bad geometric schedule parameters");
    }
    Schedule s;
    double log_from = std::log10(from), log_to = std::log10(to);
    int steps = static_cast<int>(std::ceil((log_to - log_from) * steps_per_decade - 1e-9));
    for (int i = 0; i <= steps; ++i) {
        double e = log_from + i / static_cast<double>(steps_per_decade);
        s.t_values.push_back(std::pow(10.0, std::min(e, log_to)));
    }
    if (s.t_values.back() < to * (1 - 1e-12)) s.t_values.push_back(to);
    return s;
}

Schedule Schedule::standard() {
    return geometric(10.0, 10000.0, 2);
}

void Schedule::validate() const {
    if (t_values.empty()) throw ScenarioError("schedule must be nonempty");
    double prev = 0.0;
    for (double t : t_values) {
        if (!(t > prev)) throw ScenarioError("schedule must be strictly increasing and positive");
        prev = t;
    }
}

void TorusCloud::append(const TorusCloud& o) {
    if (dim == 0) dim = o.dim;
    if (dim != o.dim) throw DimensionError("cloud dimension mismatch");
    pts.insert(pts.end(), o.pts.begin(), o.pts.end());
}

double embed_scalar(const Scalar& s, const EmbeddingConfig& cfg) {
    if (s.is_rational()) return rat_to_double(s.rational_value());
    Rat eps = make_rat(1, Int("1000000000000"));
    if (cfg.precision > 0 && cfg.precision < 1e-12) {
        eps = make_rat(1, Int("1000000000000000"));
    }
    return rat_to_double(s.approx(eps).midpoint());
}

std::vector<double> embed_vec(const KVec& v, const EmbeddingConfig& cfg) {
    std::vector<double> r(v.size());
    for (size_t i = 0; i < v.size(); ++i) r[i] = embed_scalar(v[i], cfg);
    return r;
}

std::vector<double> embed_mat(const KMat& m, const EmbeddingConfig& cfg) {
    std::vector<double> r(static_cast<size_t>(m.rows()) * m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) r[static_cast<size_t>(i) * m.cols() + j] = embed_scalar(m.at(i, j), cfg);
    return r;
}

namespace {

// sqrt of the largest eigenvalue of M^T M by power iteration.
double sigma_max(const std::vector<double>& m, int n) {
    std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
    std::vector<double> mv(n), mtmv(n);
    double lambda = 0;
    for (int iter = 0; iter < 100; ++iter) {
        for (int i = 0; i < n; ++i) {
            double s = 0;
            for (int j = 0; j < n; ++j) s += m[static_cast<size_t>(i) * n + j] * v[j];
            mv[i] = s;
        }
        for (int j = 0; j < n; ++j) {
            double s = 0;
            for (int i = 0; i < n; ++i) s += m[static_cast<size_t>(i) * n + j] * mv[i];
            mtmv[j] = s;
        }
        double norm = 0;
        for (double x : mtmv) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0) return 0;
        lambda = norm;
        for (int j = 0; j < n; ++j) v[j] = mtmv[j] / norm;
    }
    return std::sqrt(lambda);
}

} // namespace

EmbeddedLattice embed_lattice(const LatticeBasis& b, const EmbeddingConfig& cfg) {
    EmbeddedLattice lat;
    lat.m = b.dim();
    lat.b = embed_mat(b.matrix(), cfg);
    lat.binv = embed_mat(b.inverse_matrix(), cfg);
    lat.diagonal = true;
    for (int i = 0; i < lat.m && lat.diagonal; ++i) {
        for (int j = 0; j < lat.m; ++j) {
            if (i != j && lat.b[static_cast<size_t>(i) * lat.m + j] != 0.0) {
                lat.diagonal = false;
                break;
            }
        }
    }
    double smax = sigma_max(lat.b, lat.m);
    double smax_inv = sigma_max(lat.binv, lat.m);
    lat.sigma_min = smax_inv > 0 ? 1.0 / smax_inv : 0.0;
    lat.cond = smax * smax_inv;
    lat.window = cfg.offset_window;
    if (lat.cond > 10.0 && lat.window < 2) lat.window = 2; // skew basis guard
    return lat;
}

std::vector<double> reduce_mod_lattice(const std::vector<double>& v, const EmbeddedLattice& lat) {
    if (static_cast<int>(v.size()) != lat.m) throw DimensionError("reduce_mod_lattice size");
    std::vector<double> r(lat.m);
    for (int i = 0; i < lat.m; ++i) {
        double s = 0;
        for (int j = 0; j < lat.m; ++j) s += lat.binv[static_cast<size_t>(i) * lat.m + j] * v[j];
        r[i] = frac01(s);
    }
    return r;
}

double torus_distance(const double* x, const double* y, const EmbeddedLattice& lat) {
    int m = lat.m;
    if (lat.diagonal) {
        // per-coordinate nearest wrap, exact for diagonal bases
        double d2 = 0;
        for (int i = 0; i < m; ++i) {
            double u = x[i] - y[i];
            u -= std::round(u);
            double a = lat.b[static_cast<size_t>(i) * m + i] * u;
            d2 += a * a;
        }
        return std::sqrt(d2);
    }
    if (m > 8) throw DimensionError("torus_distance supports dimension <= 8");
    int w = lat.window;
    int span = 2 * w + 1;
    std::size_t total = 1;
    for (int i = 0; i < m; ++i) total *= span;
    double best = std::numeric_limits<double>::infinity();
    double u[8];
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (int i = 0; i < m; ++i) {
            int z = static_cast<int>(c % span) - w;
            c /= span;
            u[i] = x[i] - y[i] - z;
        }
        double d2 = 0;
        for (int i = 0; i < m; ++i) {
            double s = 0;
            for (int j = 0; j < m; ++j) s += lat.b[static_cast<size_t>(i) * m + j] * u[j];
            d2 += s * s;
        }
        best = std::min(best, d2);
    }
    return std::sqrt(best);
}

double torus_distance(const std::vector<double>& x, const std::vector<double>& y,
                      const EmbeddedLattice& lat) {
    return torus_distance(x.data(), y.data(), lat);
}

namespace {

// Uniform cell bucketing of a cloud over its leading index_dim coordinates,
// with wrap-aware ring search. metric(q, p) must satisfy
// metric >= lb_coef * (wrapped L-inf distance of the indexed coordinates).
class CellIndex {
public:
    CellIndex(const TorusCloud& cloud, int index_dim, double lb_coef)
        : cloud_(&cloud), dim_(cloud.dim), idx_dim_(std::min(index_dim, 4)), lb_(lb_coef) {
        std::size_t n = cloud.count();
        double per = std::pow(static_cast<double>(std::max<std::size_t>(n, 1)) / 2.0,
                              1.0 / idx_dim_);
        k_ = std::clamp(static_cast<int>(per), 1, 96);
        cell_ = 1.0 / k_;
        std::size_t cells = 1;
        for (int i = 0; i < idx_dim_; ++i) cells *= k_;
        std::vector<uint32_t> counts(cells + 1, 0);
        codes_.resize(n);
        for (std::size_t p = 0; p < n; ++p) {
            codes_[p] = cell_code(cloud.point(p));
            ++counts[codes_[p] + 1];
        }
        for (std::size_t c = 1; c <= cells; ++c) counts[c] += counts[c - 1];
        start_ = counts;
        items_.resize(n);
        std::vector<uint32_t> cursor(start_.begin(), start_.end() - 1);
        for (std::size_t p = 0; p < n; ++p) {
            items_[cursor[codes_[p]]++] = static_cast<uint32_t>(p);
        }
    }

    // Distance to the nearest cloud point. When the returned value is below
    // stop_below it may be an early-abandoned upper bound of the true
    // nearest distance, which is all a directed-Hausdorff max needs.
    template <class Metric>
    double nearest(const double* q, const Metric& metric, double stop_below = 0.0) const {
        int qc[4];
        for (int i = 0; i < idx_dim_; ++i) {
            qc[i] = std::clamp(static_cast<int>(q[i] * k_), 0, k_ - 1);
        }
        double best = std::numeric_limits<double>::infinity();
        int max_ring = k_ / 2 + 1;
        std::vector<std::pair<double, std::size_t>> ring_cells;
        for (int ring = 0; ring <= max_ring; ++ring) {
            if (ring > 0 && lb_ * (ring - 1) * cell_ >= best) break;
            // collect the occupied ring cells with per-cell lower bounds and
            // scan them nearest-first; concentrated clouds prune hard here
            ring_cells.clear();
            visit_ring(qc, ring, [&](std::size_t cell, double cell_lb) {
                if (start_[cell] != start_[cell + 1]) ring_cells.emplace_back(cell_lb, cell);
            });
            std::sort(ring_cells.begin(), ring_cells.end());
            for (const auto& [cell_lb, cell] : ring_cells) {
                if (cell_lb >= best) break;
                for (uint32_t it = start_[cell]; it < start_[cell + 1]; ++it) {
                    double d = metric(q, cloud_->point(items_[it]));
                    if (d < best) {
                        best = d;
                        if (best < stop_below) return best;
                    }
                }
            }
            if (k_ <= 2 * ring + 1) break; // ring already covered every cell
        }
        return best;
    }

private:
    std::size_t cell_code(const double* p) const {
        std::size_t code = 0;
        for (int i = 0; i < idx_dim_; ++i) {
            int c = std::clamp(static_cast<int>(p[i] * k_), 0, k_ - 1);
            code = code * k_ + c;
        }
        return code;
    }

    template <class F>
    void visit_ring(const int* qc, int ring, const F& f) const {
        int off[4];
        visit_ring_rec(qc, ring, 0, false, off, f);
    }

    template <class F>
    void visit_ring_rec(const int* qc, int ring, int axis, bool boundary, int* off,
                        const F& f) const {
        if (axis == idx_dim_) {
            if (ring == 0 || boundary) {
                std::size_t code = 0;
                double lb2 = 0;
                for (int i = 0; i < idx_dim_; ++i) {
                    int c = ((qc[i] + off[i]) % k_ + k_) % k_;
                    code = code * k_ + c;
                    double axis_gap = (std::abs(off[i]) - 1) * cell_;
                    if (axis_gap > 0) lb2 += axis_gap * axis_gap;
                }
                f(code, lb_ * std::sqrt(lb2));
            }
            return;
        }
        for (int o = -ring; o <= ring; ++o) {
            // avoid double visits once the wrap spans the whole axis
            if (k_ <= 2 * ring && o + ring >= k_) break;
            off[axis] = o;
            visit_ring_rec(qc, ring, axis + 1, boundary || std::abs(o) == ring, off, f);
        }
    }

    const TorusCloud* cloud_;
    int dim_;
    int idx_dim_;
    double lb_;
    int k_ = 1;
    double cell_ = 1.0;
    std::vector<uint32_t> start_;
    std::vector<uint32_t> items_;
    std::vector<std::size_t> codes_;
};

struct TorusMetric {
    const EmbeddedLattice* lat;
    double operator()(const double* a, const double* b) const {
        return torus_distance(a, b, *lat);
    }
};

struct HeisMetric {
    double operator()(const double* a, const double* b) const {
        return heis_distance(a, b);
    }
};

template <class Metric>
double directed_hausdorff(const TorusCloud& queries, const TorusCloud& target,
                          const CellIndex& target_index, const Metric& metric) {
    std::size_t n = queries.count();
    static_assert(sizeof(double) == sizeof(std::uint64_t));
    std::atomic<std::uint64_t> worst_bits{0};
    auto load_worst = [&]() {
        std::uint64_t bits = worst_bits.load(std::memory_order_relaxed);
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    };
    auto raise_worst = [&](double d) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, sizeof(bits));
        std::uint64_t expected = worst_bits.load();
        while (true) {
            double curd;
            std::memcpy(&curd, &expected, sizeof(curd));
            if (d <= curd) break;
            if (worst_bits.compare_exchange_weak(expected, bits)) break;
        }
    };

    // For small query sets (typically a reference grid against a possibly
    // degenerate cloud), rank queries by their distance to a sparse target
    // subset and walk them far-to-near: the true max is met almost first and
    // the remaining searches abandon cheaply.
    std::vector<std::size_t> order;
    if (n <= 65536 && target.count() > 512) {
        std::size_t stride = std::max<std::size_t>(target.count() / 256, 1);
        std::vector<double> coarse(n);
        parallel_chunks(n, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t p = 0; p < target.count(); p += stride) {
                    best = std::min(best, metric(queries.point(i), target.point(p)));
                }
                coarse[i] = best;
            }
        });
        order.resize(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return coarse[a] > coarse[b]; });
    }

    parallel_chunks(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            std::size_t q = order.empty() ? i : order[i];
            // queries that cannot raise the running max abandon early
            double cur = load_worst();
            double d = target_index.nearest(queries.point(q), metric, cur);
            if (d > cur) raise_worst(d);
        }
    });
    return load_worst();
}

} // namespace

double hausdorff(const TorusCloud& a, const TorusCloud& b, const EmbeddedLattice& lat) {
    if (a.count() == 0 || b.count() == 0) {
        throw DimensionError("Hausdorff distance of an empty cloud is undefined");
    }
    if (a.dim != lat.m || b.dim != lat.m) throw DimensionError("cloud/lattice dimension mismatch");
    TorusMetric metric{&lat};
    double lb = std::max(lat.sigma_min, 1e-12);
    CellIndex ia(a, lat.m, lb);
    CellIndex ib(b, lat.m, lb);
    return std::max(directed_hausdorff(a, b, ib, metric), directed_hausdorff(b, a, ia, metric));
}

std::vector<double> EmbeddedPoly::eval(double t) const {
    std::vector<double> acc(dim, 0.0);
    for (std::size_t i = coeffs.size(); i > 0; --i) {
        for (int j = 0; j < dim; ++j) acc[j] = acc[j] * t + coeffs[i - 1][j];
    }
    return acc;
}

std::vector<double> EmbeddedPoly::derivative_at(double t) const {
    std::vector<double> acc(dim, 0.0);
    for (std::size_t i = coeffs.size(); i > 1; --i) {
        double k = static_cast<double>(i - 1);
        for (int j = 0; j < dim; ++j) acc[j] = acc[j] * t + k * coeffs[i - 1][j];
    }
    return acc;
}

EmbeddedPoly embed_poly(const PolyVec& p, const EmbeddingConfig& cfg) {
    EmbeddedPoly e;
    e.dim = p.dim;
    for (const auto& c : p.coeffs) e.coeffs.push_back(embed_vec(c, cfg));
    return e;
}

void EmbeddedDilation::apply(double t, const double* x, double* out) const {
    for (int i = 0; i < out_dim; ++i) out[i] = 0.0;
    double tp = std::pow(t, first_degree);
    for (std::size_t d = 0; d < mats.size(); ++d) {
        const double* a = mats[d].data();
        for (int i = 0; i < out_dim; ++i) {
            double s = 0;
            for (int j = 0; j < in_dim; ++j) s += a[static_cast<size_t>(i) * in_dim + j] * x[j];
            out[i] += tp * s;
        }
        tp *= t;
    }
}

EmbeddedDilation embed_dilation(const DilationFamily& d, const EmbeddingConfig& cfg) {
    EmbeddedDilation e;
    e.out_dim = d.out_dim;
    e.in_dim = d.in_dim;
    e.first_degree = 1;
    for (const auto& a : d.mats) e.mats.push_back(embed_mat(a, cfg));
    return e;
}

EmbeddedDilation embed_raw_dilation(const std::vector<KMat>& mats_from_deg0,
                                    const EmbeddingConfig& cfg) {
    if (mats_from_deg0.empty()) throw ScenarioError("raw dilation needs at least one matrix");
    EmbeddedDilation e;
    e.out_dim = mats_from_deg0[0].rows();
    e.in_dim = mats_from_deg0[0].cols();
    e.first_degree = 0;
    for (const auto& a : mats_from_deg0) e.mats.push_back(embed_mat(a, cfg));
    return e;
}

namespace {

// Barycentric sample weights of the hull of nv vertices: all integer tuples
// (i_1..i_{nv-1}) with sum <= res, scaled by 1/res. res is chosen prime.
void enumerate_simplex(int nv, std::size_t res, std::vector<std::vector<double>>& weights) {
    std::vector<std::size_t> idx(static_cast<size_t>(nv) - 1, 0);
    std::vector<double> w(nv, 0.0);
    while (true) {
        std::size_t total = 0;
        for (auto v : idx) total += v;
        if (total <= res) {
            w[0] = static_cast<double>(res - total) / res;
            for (int s = 1; s < nv; ++s) w[s] = static_cast<double>(idx[s - 1]) / res;
            weights.push_back(w);
        }
        int axis = static_cast<int>(idx.size()) - 1;
        while (axis >= 0) {
            ++idx[axis];
            std::size_t sum = 0;
            for (auto v : idx) sum += v;
            if (sum <= res) break;
            idx[axis] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
}

std::size_t simplex_resolution(int nv, std::size_t target) {
    if (nv <= 2) return next_prime(std::max<std::size_t>(target, 16));
    double dim = nv - 1;
    double fact = 1;
    for (int i = 2; i <= nv - 1; ++i) fact *= i;
    double r = std::pow(static_cast<double>(target) * fact, 1.0 / dim);
    return next_prime(static_cast<std::size_t>(std::max(4.0, r)));
}

// Half prime-stride grid, half seeded pseudorandom barycentric points. The
// grid guarantees coverage of the hull itself; the random half breaks the
// aliasing that a pure grid suffers when the dilated image is much thinner
// than the hull (duplicate projections) or resonates with integer t.
std::vector<std::vector<double>> simplex_weights(int nv, std::size_t target) {
    std::vector<std::vector<double>> weights;
    if (nv == 1) {
        weights.push_back({1.0});
        return weights;
    }
    std::size_t grid_target = std::max<std::size_t>(target / 2, 8);
    std::size_t res = simplex_resolution(nv, grid_target);
    enumerate_simplex(nv, res, weights);
    std::size_t random_count = std::max<std::size_t>(target / 2, 8);
    std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> unif(std::numeric_limits<double>::min(), 1.0);
    std::vector<double> w(nv);
    for (std::size_t i = 0; i < random_count; ++i) {
        double total = 0;
        for (int s = 0; s < nv; ++s) {
            w[s] = -std::log(unif(rng));
            total += w[s];
        }
        for (int s = 0; s < nv; ++s) w[s] /= total;
        weights.push_back(w);
    }
    return weights;
}

// Per-piece affine data: p(t) = base(t) + sum_s lambda_s * dirs_s(t), all in
// the output space, so per-sample work is an m x (nv-1) combination.
struct PieceAffine {
    int out_dim = 0;
    std::vector<std::vector<double>> base_coeffs;              // by degree
    std::vector<std::vector<std::vector<double>>> dir_coeffs;  // [vertex-1][degree]

    void eval_at(double t, std::vector<double>& base,
                 std::vector<std::vector<double>>& dirs) const {
        auto horner = [&](const std::vector<std::vector<double>>& cs, std::vector<double>& out) {
            out.assign(out_dim, 0.0);
            for (std::size_t i = cs.size(); i > 0; --i) {
                for (int j = 0; j < out_dim; ++j) out[j] = out[j] * t + cs[i - 1][j];
            }
        };
        horner(base_coeffs, base);
        dirs.resize(dir_coeffs.size());
        for (std::size_t s = 0; s < dir_coeffs.size(); ++s) horner(dir_coeffs[s], dirs[s]);
    }
};

PieceAffine piece_affine(const std::vector<KVec>& verts, const EmbeddedDilation& dil,
                         const EmbeddingConfig& cfg) {
    PieceAffine pa;
    pa.out_dim = dil.out_dim;
    int top_degree = dil.first_degree + static_cast<int>(dil.mats.size()) - 1;
    std::vector<double> v0(verts[0].size());
    {
        auto e = embed_vec(verts[0], cfg);
        v0 = e;
    }
    pa.base_coeffs.assign(static_cast<size_t>(top_degree) + 1,
                          std::vector<double>(pa.out_dim, 0.0));
    for (std::size_t d = 0; d < dil.mats.size(); ++d) {
        int deg = dil.first_degree + static_cast<int>(d);
        const double* a = dil.mats[d].data();
        for (int i = 0; i < pa.out_dim; ++i) {
            double s = 0;
            for (int j = 0; j < dil.in_dim; ++j) s += a[static_cast<size_t>(i) * dil.in_dim + j] * v0[j];
            pa.base_coeffs[deg][i] = s;
        }
    }
    for (std::size_t sv = 1; sv < verts.size(); ++sv) {
        auto dv = embed_vec(verts[sv], cfg);
        for (std::size_t j = 0; j < dv.size(); ++j) dv[j] -= v0[j];
        std::vector<std::vector<double>> coeffs(static_cast<size_t>(top_degree) + 1,
                                                std::vector<double>(pa.out_dim, 0.0));
        for (std::size_t d = 0; d < dil.mats.size(); ++d) {
            int deg = dil.first_degree + static_cast<int>(d);
            const double* a = dil.mats[d].data();
            for (int i = 0; i < pa.out_dim; ++i) {
                double s = 0;
                for (int j = 0; j < dil.in_dim; ++j) s += a[static_cast<size_t>(i) * dil.in_dim + j] * dv[j];
                coeffs[deg][i] = s;
            }
        }
        pa.dir_coeffs.push_back(std::move(coeffs));
    }
    return pa;
}

// Rough ambient length of the dilated piece, used to scale sample counts.
double image_scale(const PieceAffine& pa, double t) {
    double total = 0;
    for (const auto& dc : pa.dir_coeffs) {
        double tp = 1, len = 0;
        for (std::size_t deg = 0; deg < dc.size(); ++deg) {
            double norm = 0;
            for (double x : dc[deg]) norm += x * x;
            len += std::sqrt(norm) * tp;
            tp *= t;
        }
        total += len;
    }
    return total;
}

} // namespace

TorusCloud sample_piece(const InputPiece& piece, const EmbeddedDilation& dil, double t,
                        const EmbeddedLattice& lat, const EmbeddingConfig& cfg) {
    TorusCloud cloud;
    cloud.dim = lat.m;
    if (std::holds_alternative<FinitePoints>(piece)) {
        std::vector<double> out(dil.out_dim);
        for (const auto& p : std::get<FinitePoints>(piece).points) {
            auto x = embed_vec(p, cfg);
            dil.apply(t, x.data(), out.data());
            auto r = reduce_mod_lattice(out, lat);
            cloud.push(r.data());
        }
        return cloud;
    }
    const auto& verts = std::get<Polytope>(piece).vertices;
    PieceAffine pa = piece_affine(verts, dil, cfg);
    if (pa.dir_coeffs.empty()) {
        std::vector<double> base;
        std::vector<std::vector<double>> dirs;
        pa.eval_at(t, base, dirs);
        auto r = reduce_mod_lattice(base, lat);
        cloud.push(r.data());
        return cloud;
    }
    double scale = image_scale(pa, t);
    std::size_t target = static_cast<std::size_t>(
        std::clamp(cfg.sample_density * scale, 200.0, static_cast<double>(cfg.max_samples)));
    std::vector<std::vector<double>> weights =
        simplex_weights(static_cast<int>(verts.size()), target);

    std::vector<double> base;
    std::vector<std::vector<double>> dirs;
    pa.eval_at(t, base, dirs);

    int m = lat.m;
    cloud.pts.resize(weights.size() * m);
    parallel_chunks(weights.size(), [&](std::size_t lo, std::size_t hi) {
        std::vector<double> pt(m);
        for (std::size_t w = lo; w < hi; ++w) {
            for (int i = 0; i < m; ++i) pt[i] = base[i];
            for (std::size_t s = 0; s < dirs.size(); ++s) {
                double lam = weights[w][s + 1];
                if (lam == 0) continue;
                for (int i = 0; i < m; ++i) pt[i] += lam * dirs[s][i];
            }
            auto r = reduce_mod_lattice(pt, lat);
            std::copy(r.begin(), r.end(), cloud.pts.begin() + w * m);
        }
    });
    return cloud;
}

TorusCloud sample_limit(const std::vector<double>& d_frac, const Subspace& closure,
                        const LatticeBasis& exact_b, const EmbeddedLattice& lat,
                        const EmbeddingConfig& cfg) {
    int m = lat.m;
    TorusCloud cloud;
    cloud.dim = m;
    auto zbasis = integer_lattice_basis(closure, exact_b);
    int s = static_cast<int>(zbasis.size());
    if (s == 0) {
        std::vector<double> p(m);
        for (int i = 0; i < m; ++i) p[i] = frac01(d_frac[i]);
        cloud.push(p.data());
        return cloud;
    }
    std::vector<std::vector<double>> z(s, std::vector<double>(m));
    std::vector<std::size_t> counts(s);
    double budget = static_cast<double>(cfg.max_samples);
    for (int i = 0; i < s; ++i) {
        for (int j = 0; j < m; ++j) z[i][j] = static_cast<double>(zbasis[i][j].convert_to<long long>());
        // period length of this subtorus axis in ambient units
        std::vector<double> amb(m, 0.0);
        for (int r = 0; r < m; ++r) {
            for (int j = 0; j < m; ++j) amb[r] += lat.b[static_cast<size_t>(r) * m + j] * z[i][j];
        }
        double len = 0;
        for (double x : amb) len += x * x;
        len = std::sqrt(len);
        counts[i] = static_cast<std::size_t>(std::clamp(cfg.sample_density * len, 8.0, budget));
    }
    // keep the grid within the sample budget
    while (true) {
        double prod = 1;
        for (auto c : counts) prod *= static_cast<double>(c);
        if (prod <= budget) break;
        auto it = std::max_element(counts.begin(), counts.end());
        if (*it <= 8) break;
        *it = std::max<std::size_t>(8, *it / 2);
    }
    std::vector<std::size_t> idx(s, 0);
    std::vector<double> p(m);
    while (true) {
        for (int i = 0; i < m; ++i) p[i] = d_frac[i];
        for (int a = 0; a < s; ++a) {
            double u = static_cast<double>(idx[a]) / static_cast<double>(counts[a]);
            for (int i = 0; i < m; ++i) p[i] += u * z[a][i];
        }
        for (int i = 0; i < m; ++i) p[i] = frac01(p[i]);
        cloud.push(p.data());
        int axis = s - 1;
        while (axis >= 0) {
            if (++idx[axis] < counts[axis]) break;
            idx[axis] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    return cloud;
}

TorusCloud full_grid(int m, int per_dim) {
    TorusCloud cloud;
    cloud.dim = m;
    std::vector<int> idx(m, 0);
    std::vector<double> p(m);
    while (true) {
        for (int i = 0; i < m; ++i) p[i] = static_cast<double>(idx[i]) / per_dim;
        cloud.push(p.data());
        int axis = m - 1;
        while (axis >= 0) {
            if (++idx[axis] < per_dim) break;
            idx[axis] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    return cloud;
}

void heis_reduce(double g[3]) {
    double ka = -std::floor(g[0]);
    g[0] += ka;
    if (g[0] >= 1.0) g[0] = 0.0;
    // right-multiplication by [0, kb, 0] adds a*kb to the central coordinate
    double kb = -std::floor(g[1]);
    g[2] += g[0] * kb;
    g[1] += kb;
    if (g[1] >= 1.0) g[1] = 0.0;
    g[2] -= std::floor(g[2]);
    if (g[2] >= 1.0) g[2] = 0.0;
}

double heis_distance(const double* x, const double* y) {
    // v = x^{-1} y; then minimize |coords(v * gamma)| over integer gamma,
    // with the first and central components minimized in closed form.
    double v0 = y[0] - x[0];
    double v1 = y[1] - x[1];
    double v2 = -x[0] * y[1] + (x[0] * x[1] - x[2]) + y[2];
    double t0 = v0 - std::round(v0);
    double best = std::numeric_limits<double>::infinity();
    for (int g2 = -1; g2 <= 1; ++g2) {
        double t1 = v1 + g2;
        double w = v0 * g2 + v2;
        double t2 = w - std::round(w);
        double d2 = t0 * t0 + t1 * t1 + t2 * t2;
        if (d2 < best) best = d2;
    }
    return std::sqrt(best);
}

double heis_hausdorff(const TorusCloud& a, const TorusCloud& b) {
    if (a.count() == 0 || b.count() == 0) {
        throw DimensionError("Hausdorff distance of an empty cloud is undefined");
    }
    HeisMetric metric;
    CellIndex ia(a, 2, 1.0);
    CellIndex ib(b, 2, 1.0);
    return std::max(directed_hausdorff(a, b, ib, metric), directed_hausdorff(b, a, ia, metric));
}

void EmbeddedHeisenberg::group_coords(const double* v, int dim, double out[3]) const {
    double a = 0, b = 0, c = 0;
    for (int i = 0; i < dim; ++i) {
        a += v[i] * basis[0][i];
        b += v[i] * basis[1][i];
        c += v[i] * basis[2][i];
    }
    out[0] = a;
    out[1] = b;
    out[2] = c + 0.5 * a * b; // exp of a 3x3 strictly upper matrix
}

EmbeddedHeisenberg embed_heisenberg(const SpecPtr& spec, const EmbeddingConfig& cfg) {
    if (spec->matrix_size() != 3) {
        throw UnsupportedLatticeError("heisenberg embedding requires 3x3 matrices");
    }
    EmbeddedHeisenberg h;
    h.basis.assign(3, std::vector<double>(spec->dim()));
    for (int k = 0; k < spec->dim(); ++k) {
        const KMat& bm = spec->algebra_basis()[k];
        h.basis[0][k] = embed_scalar(bm.at(0, 1), cfg);
        h.basis[1][k] = embed_scalar(bm.at(1, 2), cfg);
        h.basis[2][k] = embed_scalar(bm.at(0, 2), cfg);
    }
    return h;
}

TorusCloud sample_heis_piece(const InputPiece& piece, const EmbeddedDilation& dil,
                             const EmbeddedHeisenberg& h, double t, const EmbeddingConfig& cfg) {
    TorusCloud cloud;
    cloud.dim = 3;
    int dim_g = dil.out_dim;
    if (std::holds_alternative<FinitePoints>(piece)) {
        std::vector<double> alg(dim_g);
        for (const auto& p : std::get<FinitePoints>(piece).points) {
            auto x = embed_vec(p, cfg);
            dil.apply(t, x.data(), alg.data());
            double g[3];
            h.group_coords(alg.data(), dim_g, g);
            heis_reduce(g);
            cloud.push(g);
        }
        return cloud;
    }
    const auto& verts = std::get<Polytope>(piece).vertices;
    PieceAffine pa = piece_affine(verts, dil, cfg);
    double scale = image_scale(pa, t);
    std::size_t target = static_cast<std::size_t>(
        std::clamp(cfg.sample_density * scale, 200.0, static_cast<double>(cfg.max_samples)));
    std::vector<std::vector<double>> weights =
        simplex_weights(static_cast<int>(verts.size()), target);

    std::vector<double> base;
    std::vector<std::vector<double>> dirs;
    pa.eval_at(t, base, dirs);
    cloud.pts.resize(weights.size() * 3);
    parallel_chunks(weights.size(), [&](std::size_t lo, std::size_t hi) {
        std::vector<double> alg(dim_g);
        for (std::size_t w = lo; w < hi; ++w) {
            for (int i = 0; i < dim_g; ++i) alg[i] = base[i];
            for (std::size_t s = 0; s < dirs.size(); ++s) {
                double lam = weights[w][s + 1];
                if (lam == 0) continue;
                for (int i = 0; i < dim_g; ++i) alg[i] += lam * dirs[s][i];
            }
            double g[3];
            h.group_coords(alg.data(), dim_g, g);
            heis_reduce(g);
            std::copy(g, g + 3, cloud.pts.begin() + w * 3);
        }
    });
    return cloud;
}

// --- verification -----------------------------------------------------------

namespace {

struct CompletenessTargets {
    int block_dim = 0; // m
    int blocks = 0;    // n
    std::vector<std::vector<double>> targets; // fractional, m*n each
};

CompletenessTargets build_targets(const LimitFamily& limits, const EmbeddedLattice& lat,
                                  const EmbeddingConfig& cfg) {
    CompletenessTargets ct;
    ct.block_dim = lat.m;
    ct.blocks = std::max(limits.n, 1);
    int mn = ct.block_dim * ct.blocks;
    LatticeBasis big = power_lattice(limits.lattice, ct.blocks);
    auto zbasis = integer_lattice_basis(limits.vclosed, big);
    int s = static_cast<int>(zbasis.size());

    // fractional coordinates of cbar, blockwise
    std::vector<double> cbar_frac(mn, 0.0);
    if (!limits.cbar.empty()) {
        auto cemb = embed_vec(limits.cbar, cfg);
        for (int blk = 0; blk < ct.blocks; ++blk) {
            std::vector<double> v(cemb.begin() + blk * ct.block_dim,
                                  cemb.begin() + (blk + 1) * ct.block_dim);
            auto r = reduce_mod_lattice(v, lat);
            std::copy(r.begin(), r.end(), cbar_frac.begin() + blk * ct.block_dim);
        }
    }
    if (s == 0) {
        ct.targets.push_back(cbar_frac);
        return ct;
    }
    int per_dim = cfg.target_grid_per_dim;
    while (std::pow(static_cast<double>(per_dim), s) > static_cast<double>(cfg.max_targets) &&
           per_dim > 2) {
        --per_dim;
    }
    std::vector<int> idx(s, 0);
    while (true) {
        std::vector<double> tgt = cbar_frac;
        for (int a = 0; a < s; ++a) {
            double u = static_cast<double>(idx[a]) / per_dim;
            for (int j = 0; j < mn; ++j) {
                tgt[j] += u * static_cast<double>(zbasis[a][j].convert_to<long long>());
            }
        }
        for (auto& x : tgt) x = frac01(x);
        ct.targets.push_back(std::move(tgt));
        int axis = s - 1;
        while (axis >= 0) {
            if (++idx[axis] < per_dim) break;
            idx[axis] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    return ct;
}

// Samples pi(a(t) + C) for a body piece C living in the ambient space.
TorusCloud sample_translated_body(const InputPiece& body, const EmbeddedPoly& a, double t,
                                  const EmbeddedLattice& lat, const EmbeddingConfig& cfg) {
    int m = lat.m;
    if (piece_dim(body) != m) {
        throw DimensionError("translated body must live in the ambient space");
    }
    EmbeddedDilation ident;
    ident.out_dim = m;
    ident.in_dim = m;
    ident.first_degree = 0;
    ident.mats.push_back(std::vector<double>(static_cast<size_t>(m) * m, 0.0));
    for (int i = 0; i < m; ++i) ident.mats[0][static_cast<size_t>(i) * m + i] = 1.0;
    TorusCloud raw = sample_piece(body, ident, 1.0, lat, cfg);

    auto at = a.eval(t);
    std::vector<double> alat(m, 0.0);
    for (int r = 0; r < m; ++r) {
        double s = 0;
        for (int j = 0; j < m; ++j) s += lat.binv[static_cast<size_t>(r) * m + j] * at[j];
        alat[r] = s;
    }
    TorusCloud cloud;
    cloud.dim = m;
    std::vector<double> p(m);
    for (std::size_t i = 0; i < raw.count(); ++i) {
        for (int j = 0; j < m; ++j) p[j] = frac01(raw.point(i)[j] + alat[j]);
        cloud.push(p.data());
    }
    return cloud;
}

double product_torus_distance(const std::vector<double>& sigma_frac,
                              const std::vector<double>& target,
                              const EmbeddedLattice& lat, int blocks) {
    double d2 = 0;
    for (int blk = 0; blk < blocks; ++blk) {
        double d = torus_distance(sigma_frac.data() + blk * lat.m,
                                  target.data() + blk * lat.m, lat);
        d2 += d * d;
    }
    return std::sqrt(d2);
}

// Sweeps sigma(t) over [t_lo, t_hi], improving per-target best distances.
// The step adapts to the curve speed in fractional coordinates.
void completeness_sweep(const EmbeddedPoly& sigma, const EmbeddedLattice& lat, int blocks,
                        const CompletenessTargets& ct, double t_lo, double t_hi,
                        const EmbeddingConfig& cfg, std::vector<double>& best,
                        std::size_t& step_budget) {
    double binv_norm = 0; // max row sum of B^{-1}
    for (int i = 0; i < lat.m; ++i) {
        double s = 0;
        for (int j = 0; j < lat.m; ++j) s += std::abs(lat.binv[static_cast<size_t>(i) * lat.m + j]);
        binv_norm = std::max(binv_norm, s);
    }
    double t = t_lo;
    std::vector<double> sfrac(sigma.dim);
    while (t <= t_hi && step_budget > 0) {
        --step_budget;
        auto sval = sigma.eval(t);
        for (int blk = 0; blk < blocks; ++blk) {
            std::vector<double> v(sval.begin() + blk * lat.m, sval.begin() + (blk + 1) * lat.m);
            auto r = reduce_mod_lattice(v, lat);
            std::copy(r.begin(), r.end(), sfrac.begin() + blk * lat.m);
        }
        bool all_done = true;
        for (std::size_t k = 0; k < ct.targets.size(); ++k) {
            if (best[k] <= 2 * cfg.completeness_mesh) continue;
            double d = product_torus_distance(sfrac, ct.targets[k], lat, blocks);
            if (d < best[k]) best[k] = d;
            if (best[k] > 2 * cfg.completeness_mesh) all_done = false;
        }
        if (all_done) break;
        auto dv = sigma.derivative_at(t);
        double speed = 0;
        for (double x : dv) speed += x * x;
        speed = std::sqrt(speed) * binv_norm;
        double dt = cfg.completeness_mesh / std::max(speed, 1e-9);
        dt = std::clamp(dt, 1e-9 * std::max(t, 1.0), (t_hi - t_lo) / 8 + 1e-12);
        t += dt;
    }
}

} // namespace

AbelianVerifyResult verify_abelian(const AbelianVerifyInputs& in, const Schedule& schedule,
                                   const EmbeddingConfig& cfg) {
    schedule.validate();
    const LatticeBasis& b = in.limits->lattice;
    EmbeddedLattice lat = embed_lattice(b, cfg);
    int m = lat.m;

    AbelianVerifyResult result;
    for (const auto& cl : in.limits->closures) {
        if (cl.is_full()) result.limit_is_fullspace = true;
    }

    TorusCloud grid = full_grid(m, cfg.full_grid_per_dim);

    const bool body_mode = in.translate != nullptr;
    std::vector<EmbeddedPoly> sigma;
    EmbeddedDilation edil;
    EmbeddedPoly etrans;
    if (body_mode) {
        etrans = embed_poly(*in.translate, cfg);
        result.limit_is_fullspace = false; // decided numerically below
    } else {
        edil = embed_dilation(*in.dil, cfg);
        for (const auto& c : in.family->cosets) sigma.push_back(embed_poly(c.translate, cfg));
    }

    // Completeness targets and the stacked translate curve.
    CompletenessTargets targets = build_targets(*in.limits, lat, cfg);
    EmbeddedPoly stacked;
    if (body_mode) {
        stacked = etrans;
    } else {
        stacked.dim = m * std::max(in.family->size(), 1);
        std::size_t deg = 1;
        for (const auto& s : sigma) deg = std::max(deg, s.coeffs.size());
        stacked.coeffs.assign(deg, std::vector<double>(stacked.dim, 0.0));
        for (int j = 0; j < in.family->size(); ++j) {
            for (std::size_t d = 0; d < sigma[j].coeffs.size(); ++d) {
                std::copy(sigma[j].coeffs[d].begin(), sigma[j].coeffs[d].end(),
                          stacked.coeffs[d].begin() + static_cast<std::size_t>(j) * m);
            }
        }
    }
    std::vector<double> best(targets.targets.size(),
                             std::numeric_limits<double>::infinity());
    std::size_t sweep_budget = cfg.max_sweep_steps;
    result.completeness.targets = targets.targets.size();

    // In body mode the predicted limit at parameter t is pi(a(t) + C) itself;
    // it is sampled at the same density as the family side.
    EmbeddingConfig limit_cfg = cfg;

    for (std::size_t row_idx = 0; row_idx < schedule.t_values.size(); ++row_idx) {
        double t = schedule.t_values[row_idx];
        auto start = std::chrono::steady_clock::now();
        VerifyRow row;
        row.t = t;

        TorusCloud cloud_f;
        cloud_f.dim = m;
        TorusCloud cloud_m;
        cloud_m.dim = m;
        if (body_mode) {
            cloud_f = sample_translated_body(*in.body, etrans, t, lat, cfg);
            cloud_m = cloud_f; // the nearest predicted limit set coincides with F_t
        } else {
            for (const auto& piece : in.input->pieces) {
                cloud_f.append(sample_piece(piece, edil, t, lat, cfg));
            }
            for (int j = 0; j < in.family->size(); ++j) {
                auto sval = sigma[static_cast<std::size_t>(j)].eval(t);
                auto d_frac = reduce_mod_lattice(sval, lat);
                cloud_m.append(sample_limit(d_frac,
                                            in.limits->closures[static_cast<std::size_t>(j)],
                                            b, lat, limit_cfg));
            }
        }
        row.samples_used = cloud_f.count();
        row.sound_dh = hausdorff(cloud_f, cloud_m, lat);
        row.fullspace_dh = hausdorff(cloud_f, grid, lat);

        // advance the completeness sweep through this schedule segment
        double seg_lo = row_idx == 0 ? schedule.t_values.front() : schedule.t_values[row_idx - 1];
        completeness_sweep(stacked, lat, targets.blocks, targets, seg_lo, t, cfg, best,
                           sweep_budget);
        double worst = 0;
        for (double d : best) worst = std::max(worst, d);
        row.worst_target = worst;
        result.completeness.per_segment_running.push_back(worst);

        row.wall_ms = wall_ms_since(start);
        result.rows.push_back(row);
    }
    result.completeness.worst =
        result.completeness.per_segment_running.empty()
            ? 0.0
            : result.completeness.per_segment_running.back();

    if (body_mode) {
        // predicted limits are full iff pi(a(t) + C) fills the torus
        double worst_full = 0;
        for (const auto& row : result.rows) worst_full = std::max(worst_full, row.fullspace_dh);
        result.limit_is_fullspace = worst_full <= 4.0 / cfg.full_grid_per_dim;
    }
    return result;
}

std::vector<HeisVerifyRow> verify_heis_fullspace(const InputSet& x, const DilationFamily& dil,
                                                 const SpecPtr& spec, const Schedule& schedule,
                                                 const EmbeddingConfig& cfg) {
    schedule.validate();
    EmbeddedDilation edil = embed_dilation(dil, cfg);
    EmbeddedHeisenberg h = embed_heisenberg(spec, cfg);
    TorusCloud grid = full_grid(3, cfg.full_grid_per_dim);
    std::vector<HeisVerifyRow> rows;
    for (double t : schedule.t_values) {
        auto start = std::chrono::steady_clock::now();
        TorusCloud cloud;
        cloud.dim = 3;
        for (const auto& piece : x.pieces) {
            cloud.append(sample_heis_piece(piece, edil, h, t, cfg));
        }
        HeisVerifyRow row;
        row.t = t;
        row.samples_used = cloud.count();
        row.fullspace_dh = heis_hausdorff(cloud, grid);
        row.wall_ms = wall_ms_since(start);
        rows.push_back(row);
    }
    return rows;
}

namespace {

bool certify_scale(const std::function<TorusCloud(double, const EmbeddedLattice&)>& sampler,
                   const LatticeBasis& scaled, const Schedule& schedule,
                   const EmbeddingConfig& cfg, double margin) {
    EmbeddedLattice lat = embed_lattice(scaled, cfg);
    TorusCloud grid = full_grid(lat.m, cfg.full_grid_per_dim);
    for (double t : schedule.t_values) {
        TorusCloud cloud = sampler(t, lat);
        if (hausdorff(cloud, grid, lat) < margin) return false;
    }
    return true;
}

} // namespace

std::optional<int> nonconvergence_index(const MultiCosetFamily& m, const LatticeBasis& b,
                                        int n_max, const Schedule& schedule,
                                        const EmbeddingConfig& cfg, double margin) {
    if (classify_convergence(m, b) == Convergence::ConvergesStronglyToFull) {
        throw Error("nonconvergence_index requires a NotFull classification");
    }
    std::vector<EmbeddedPoly> sigma;
    for (const auto& c : m.cosets) sigma.push_back(embed_poly(c.translate, cfg));
    for (int n = 1; n <= n_max; ++n) {
        LatticeBasis scaled = b.scaled(Rat(n));
        std::vector<Subspace> closures;
        for (const auto& c : m.cosets) closures.push_back(rational_closure(c.direction, scaled));
        auto sampler = [&](double t, const EmbeddedLattice& lat) {
            TorusCloud cloud;
            cloud.dim = lat.m;
            for (int j = 0; j < m.size(); ++j) {
                auto sval = sigma[static_cast<std::size_t>(j)].eval(t);
                auto d_frac = reduce_mod_lattice(sval, lat);
                cloud.append(sample_limit(d_frac, closures[static_cast<std::size_t>(j)], scaled,
                                          lat, cfg));
            }
            return cloud;
        };
        if (certify_scale(sampler, scaled, schedule, cfg, margin)) return n;
    }
    return std::nullopt;
}

std::optional<int> nonconvergence_index_body(const PolyVec& a, const InputPiece& body,
                                             const LatticeBasis& b, int n_max,
                                             const Schedule& schedule,
                                             const EmbeddingConfig& cfg, double margin) {
    EmbeddedPoly ea = embed_poly(a, cfg);
    for (int n = 1; n <= n_max; ++n) {
        LatticeBasis scaled = b.scaled(Rat(n));
        auto sampler = [&](double t, const EmbeddedLattice& lat) {
            return sample_translated_body(body, ea, t, lat, cfg);
        };
        if (certify_scale(sampler, scaled, schedule, cfg, margin)) return n;
    }
    return std::nullopt;
}

} // namespace nilflow
