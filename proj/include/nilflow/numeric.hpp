#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nilflow/limits.hpp"

namespace nilflow {

struct EmbeddingConfig {
    double precision = 1e-12;     // certified interval width before rounding
    double sample_density = 200.0; // points per unit length of the embedded image
    int offset_window = 1;        // lattice-translate search radius
    std::size_t max_samples = 1000000;
    int full_grid_per_dim = 32;
    int target_grid_per_dim = 8;
    std::size_t max_targets = 4096;
    double completeness_mesh = 0.01;   // torus step between sweep samples
    std::size_t max_sweep_steps = 2000000;
};

struct VerifyTolerances {
    double sound = 0.05;
    double complete = 0.05;
    double fullspace = 0.1;
    double nonfull_margin = 0.1;
};

/// Strictly increasing positive dilation parameters.
struct Schedule {
    std::vector<double> t_values;

    static Schedule geometric(double from, double to, int steps_per_decade);
    static Schedule standard(); // 10, 10^1.5, ..., 10^4

    void validate() const;
};

/// Finite point cloud in fractional lattice coordinates, entries in [0,1).
struct TorusCloud {
    int dim = 0;
    std::vector<double> pts; // flattened, size = dim * count

    std::size_t count() const { return dim == 0 ? 0 : pts.size() / dim; }
    const double* point(std::size_t i) const { return pts.data() + i * dim; }
    void push(const double* p) { pts.insert(pts.end(), p, p + dim); }
    void append(const TorusCloud& o);
};

/// Lattice basis embedded into doubles, with inverse and a conditioning
/// estimate that widens the translate search window for skew bases.
struct EmbeddedLattice {
    int m = 0;
    std::vector<double> b;    // row major m x m
    std::vector<double> binv;
    double sigma_min = 1.0;   // lower bound coefficient for cell pruning
    double cond = 1.0;
    int window = 1;
    bool diagonal = false;
};

double embed_scalar(const Scalar& s, const EmbeddingConfig& cfg);
std::vector<double> embed_vec(const KVec& v, const EmbeddingConfig& cfg);
std::vector<double> embed_mat(const KMat& m, const EmbeddingConfig& cfg); // row major
EmbeddedLattice embed_lattice(const LatticeBasis& b, const EmbeddingConfig& cfg);

// frac(B^{-1} v), componentwise in [0,1).
std::vector<double> reduce_mod_lattice(const std::vector<double>& v, const EmbeddedLattice& lat);

// min over integer offsets z in [-w,w]^m of |B (x - y - z)|_2.
double torus_distance(const double* x, const double* y, const EmbeddedLattice& lat);
double torus_distance(const std::vector<double>& x, const std::vector<double>& y,
                      const EmbeddedLattice& lat);

// Hausdorff distance between finite clouds under the torus metric.
double hausdorff(const TorusCloud& a, const TorusCloud& b, const EmbeddedLattice& lat);

/// Embedded polynomial curve sum t^i c_i with double coefficients.
struct EmbeddedPoly {
    int dim = 0;
    std::vector<std::vector<double>> coeffs; // by ascending degree
    std::vector<double> eval(double t) const;
    std::vector<double> derivative_at(double t) const;
};

EmbeddedPoly embed_poly(const PolyVec& p, const EmbeddingConfig& cfg);

/// Embeds a dilation family once so per-sample evaluation is pure float work.
/// first_degree is 0 for raw (non-proper) families, 1 otherwise.
struct EmbeddedDilation {
    int out_dim = 0, in_dim = 0;
    int first_degree = 1;
    std::vector<std::vector<double>> mats; // degrees first_degree..d, row major
    void apply(double t, const double* x, double* out) const;
};

EmbeddedDilation embed_dilation(const DilationFamily& d, const EmbeddingConfig& cfg);
EmbeddedDilation embed_raw_dilation(const std::vector<KMat>& mats_from_deg0,
                                    const EmbeddingConfig& cfg);

// Samples rho_t(piece) reduced modulo the lattice. Point pieces map their
// points; polytopes get a low-resonance barycentric grid whose size tracks
// the embedded image scale, capped at cfg.max_samples.
TorusCloud sample_piece(const InputPiece& piece, const EmbeddedDilation& dil, double t,
                        const EmbeddedLattice& lat, const EmbeddingConfig& cfg);

// Grids the closed affine subtorus d + closure exactly inside [0,1)^m using
// a primitive integer basis of the closure in lattice coordinates.
TorusCloud sample_limit(const std::vector<double>& d_frac, const Subspace& closure,
                        const LatticeBasis& exact_b, const EmbeddedLattice& lat,
                        const EmbeddingConfig& cfg);

TorusCloud full_grid(int m, int per_dim);

// --- Heisenberg nilmanifold -----------------------------------------------

// Right-multiplies by integer lattice elements to bring a, b and then c
// into [0,1); the central update follows the group law.
void heis_reduce(double g[3]);

// Quotient pseudo-metric: min over integer gamma of |coords(x^{-1} y gamma)|,
// with the first and central offsets minimized in closed form.
double heis_distance(const double* x, const double* y);

double heis_hausdorff(const TorusCloud& a, const TorusCloud& b);

/// Per-sample exp through an embedded algebra basis; extracts Heisenberg
/// coordinates from entries (0,1), (1,2), (0,2).
struct EmbeddedHeisenberg {
    std::vector<std::vector<double>> basis; // dim_G matrices, row major 3x3
    void group_coords(const double* algebra_coords, int dim, double out[3]) const;
};

EmbeddedHeisenberg embed_heisenberg(const SpecPtr& spec, const EmbeddingConfig& cfg);

TorusCloud sample_heis_piece(const InputPiece& piece, const EmbeddedDilation& dil,
                             const EmbeddedHeisenberg& h, double t, const EmbeddingConfig& cfg);

struct HeisVerifyRow {
    double t = 0;
    double fullspace_dh = 0; // heis d_H(pi(rho_t X), fullspace grid)
    std::size_t samples_used = 0;
    double wall_ms = 0;
};

// Distance of the sampled nilmanifold image to a full grid, per scheduled t.
std::vector<HeisVerifyRow> verify_heis_fullspace(const InputSet& x, const DilationFamily& dil,
                                                 const SpecPtr& spec, const Schedule& schedule,
                                                 const EmbeddingConfig& cfg);

// --- verification ----------------------------------------------------------

struct VerifyRow {
    double t = 0;
    double sound_dh = 0;          // d_H(pi(F_t), pi(predicted limit at t))
    double fullspace_dh = 0;      // d_H(pi(F_t), full-space grid)
    double worst_target = 0;      // running completeness max-min up to this t
    std::size_t samples_used = 0;
    double wall_ms = 0;
};

struct CompletenessResult {
    double worst = 0;              // max over targets of best sweep distance
    std::size_t targets = 0;
    std::vector<double> per_segment_running; // parallel to schedule rows
};

// Exact inputs an abelian verification run needs (non-owning).
struct AbelianVerifyInputs {
    const DilationFamily* dil = nullptr; // nullptr in translated-body mode
    const InputSet* input = nullptr;
    const PolyVec* translate = nullptr;  // translated-body mode
    const InputPiece* body = nullptr;    // translated-body mode
    const MultiCosetFamily* family = nullptr; // nullptr in translated-body mode
    const LimitFamily* limits = nullptr;      // limits->lattice is the working lattice
};

struct AbelianVerifyResult {
    std::vector<VerifyRow> rows;
    CompletenessResult completeness;
    bool limit_is_fullspace = false; // predicted limit sets equal the whole torus
};

AbelianVerifyResult verify_abelian(const AbelianVerifyInputs& in, const Schedule& schedule,
                                   const EmbeddingConfig& cfg);

// First N in 1..n_max for which every scheduled t keeps the closed limit
// family at distance >= margin from the full N Gamma torus; nullopt when no
// N certifies.
std::optional<int> nonconvergence_index(const MultiCosetFamily& m, const LatticeBasis& b,
                                        int n_max, const Schedule& schedule,
                                        const EmbeddingConfig& cfg, double margin);

// Translated-body variant: the family a(t) + C itself is sampled.
std::optional<int> nonconvergence_index_body(const PolyVec& a, const InputPiece& body,
                                             const LatticeBasis& b, int n_max,
                                             const Schedule& schedule,
                                             const EmbeddingConfig& cfg, double margin);

// Worker-count helper honoring the NILFLOW_THREADS environment variable.
int worker_count();

} // namespace nilflow
