#include "nilflow/scenario.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

namespace nilflow {

const char* mode_name(ScenarioMode m) {
    switch (m) {
        case ScenarioMode::Abelian: return "abelian";
        case ScenarioMode::Unipotent: return "unipotent";
        case ScenarioMode::TranslatedBody: return "translated_body";
        case ScenarioMode::Raw: return "raw";
    }
    return "?";
}

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ScenarioError("scenario field '" + where + "': " + what);
}

Rat parse_rat_json(const json& j, const std::string& where) {
    if (j.is_string()) return parse_rat(j.get<std::string>());
    if (j.is_number_integer()) return Rat(j.get<long long>());
    fail(where, "expected a decimal-free rational string or integer");
}

} // namespace

Scalar parse_scalar(const json& j, const FieldPtr& f) {
    if (j.is_array()) {
        if (static_cast<int>(j.size()) > f->degree()) {
            throw ScenarioError("scalar coefficient list longer than the field degree");
        }
        std::vector<Rat> coeffs(f->degree(), Rat(0));
        for (size_t k = 0; k < j.size(); ++k) {
            coeffs[k] = parse_rat_json(j[k], "scalar");
        }
        return Scalar(f, std::move(coeffs));
    }
    return Scalar(f, parse_rat_json(j, "scalar"));
}

KVec parse_vector(const json& j, const FieldPtr& f) {
    if (!j.is_array()) throw ScenarioError("expected a vector (array of scalars)");
    KVec v;
    for (const auto& e : j) v.push_back(parse_scalar(e, f));
    return v;
}

KMat parse_matrix(const json& j, const FieldPtr& f) {
    if (!j.is_array() || j.empty()) throw ScenarioError("expected a matrix (array of rows)");
    std::vector<KVec> rows;
    for (const auto& r : j) rows.push_back(parse_vector(r, f));
    return KMat::from_rows(rows, f);
}

json scalar_json(const Scalar& s) {
    if (s.is_rational()) return format_rat(s.rational_value());
    json arr = json::array();
    for (const auto& c : s.coeffs()) arr.push_back(format_rat(c));
    return arr;
}

json vector_json(const KVec& v) {
    json arr = json::array();
    for (const auto& s : v) arr.push_back(scalar_json(s));
    return arr;
}

json subspace_json(const Subspace& s) {
    json arr = json::array();
    for (const auto& row : s.basis()) arr.push_back(vector_json(row));
    return arr;
}

FieldPtr parse_number_field(const json& f) {
    if (!f.contains("minpoly") || !f.contains("root_between")) {
        fail("field", "need 'minpoly' and 'root_between'");
    }
    RatPoly mp;
    for (const auto& c : f["minpoly"]) mp.push_back(parse_rat_json(c, "field.minpoly"));
    const json& rb = f["root_between"];
    if (!rb.is_array() || rb.size() != 2) fail("field.root_between", "expected [lo, hi]");
    return NumberField::make(mp, parse_rat_json(rb[0], "field.root_between"),
                             parse_rat_json(rb[1], "field.root_between"));
}

namespace {

FieldPtr parse_field(const json& j) {
    if (!j.contains("field") || j["field"].is_null()) return NumberField::rationals();
    return parse_number_field(j["field"]);
}

SpecPtr parse_group(const json& j, const FieldPtr& f) {
    if (!j.contains("group")) fail("group", "required in unipotent mode");
    const json& g = j["group"];
    if (g.is_string()) {
        std::string name = g.get<std::string>();
        if (name == "heisenberg3") return UnipotentGroupSpec::heisenberg3(f);
        auto colon = name.find(':');
        if (colon != std::string::npos) {
            std::string kind = name.substr(0, colon);
            int arg = std::stoi(name.substr(colon + 1));
            if (kind == "abelian") return UnipotentGroupSpec::abelian(arg, f);
            if (kind == "full_un") return UnipotentGroupSpec::full_un(arg, f);
        }
        fail("group", "unknown builtin '" + name + "'");
    }
    if (!g.contains("n") || !g.contains("algebra_basis")) {
        fail("group", "explicit groups need 'n' and 'algebra_basis'");
    }
    int n = g["n"].get<int>();
    std::vector<KMat> basis;
    for (const auto& bm : g["algebra_basis"]) basis.push_back(parse_matrix(bm, f));
    return UnipotentGroupSpec::make(n, std::move(basis), f);
}

GroupElement parse_group_element(const json& j, const SpecPtr& spec) {
    const FieldPtr& f = spec->field();
    int n = spec->matrix_size();
    if (j.is_array() && !j.empty() && !j[0].is_array()) {
        // Heisenberg shorthand [a, b, c]
        if (spec->name() != "heisenberg3" || j.size() != 3) {
            fail("lattice.generators", "coordinate triples are only valid for heisenberg3");
        }
        KMat m = KMat::identity(3, f);
        m.at(0, 1) = parse_scalar(j[0], f);
        m.at(1, 2) = parse_scalar(j[1], f);
        m.at(0, 2) = parse_scalar(j[2], f);
        return GroupElement(spec, m);
    }
    KMat m = parse_matrix(j, f);
    if (m.rows() != n) fail("lattice.generators", "matrix size mismatch");
    GroupElement g(spec, m);
    log_elem(g); // validates spec membership
    return g;
}

DilationFamily parse_dilation(const json& j, const FieldPtr& f, const char* key) {
    if (!j.contains(key)) fail(key, "required");
    const json& d = j[key];
    if (!d.is_object() || d.empty()) fail(key, "expected an object keyed by degree");
    int max_deg = 0;
    for (const auto& [k, v] : d.items()) {
        int deg = std::stoi(k);
        if (deg < 1) fail(key, "degrees start at 1 (use raw mode for constant terms)");
        max_deg = std::max(max_deg, deg);
    }
    DilationFamily fam;
    std::vector<std::optional<KMat>> mats(static_cast<size_t>(max_deg));
    for (const auto& [k, v] : d.items()) {
        int deg = std::stoi(k);
        mats[static_cast<size_t>(deg) - 1] = parse_matrix(v, f);
    }
    for (size_t i = 0; i < mats.size(); ++i) {
        if (!mats[i]) {
            // missing intermediate degree: zero matrix of matching shape
            for (const auto& mm : mats) {
                if (mm) {
                    mats[i] = KMat(mm->rows(), mm->cols(), f);
                    break;
                }
            }
        }
    }
    fam.out_dim = mats[0]->rows();
    fam.in_dim = mats[0]->cols();
    for (auto& mm : mats) {
        if (mm->rows() != fam.out_dim || mm->cols() != fam.in_dim) {
            fail(key, "matrices must share one shape");
        }
        fam.mats.push_back(std::move(*mm));
    }
    return fam;
}

std::vector<KMat> parse_raw_dilation(const json& j, const FieldPtr& f) {
    if (!j.contains("raw_dilation")) fail("raw_dilation", "required in raw mode");
    const json& d = j["raw_dilation"];
    int max_deg = 0;
    for (const auto& [k, v] : d.items()) max_deg = std::max(max_deg, std::stoi(k));
    int rows = 0, cols = 0;
    for (const auto& [k, v] : d.items()) {
        KMat m = parse_matrix(v, f);
        rows = m.rows();
        cols = m.cols();
        break;
    }
    std::vector<KMat> mats(static_cast<size_t>(max_deg) + 1, KMat(rows, cols, f));
    for (const auto& [k, v] : d.items()) {
        mats[static_cast<size_t>(std::stoi(k))] = parse_matrix(v, f);
    }
    return mats;
}

InputPiece parse_piece(const json& j, const FieldPtr& f) {
    if (j.contains("points")) {
        FinitePoints fp;
        for (const auto& p : j["points"]) fp.points.push_back(parse_vector(p, f));
        if (fp.points.empty()) fail("input_set", "empty points piece");
        return fp;
    }
    if (j.contains("polytope")) {
        Polytope poly;
        for (const auto& p : j["polytope"]) poly.vertices.push_back(parse_vector(p, f));
        if (poly.vertices.empty()) fail("input_set", "empty polytope piece");
        for (size_t a = 0; a < poly.vertices.size(); ++a) {
            for (size_t b = a + 1; b < poly.vertices.size(); ++b) {
                if (kvec_is_zero(kvec_sub(poly.vertices[a], poly.vertices[b]))) {
                    fail("input_set", "polytope vertices must be distinct");
                }
            }
        }
        return poly;
    }
    fail("input_set", "each piece needs 'points' or 'polytope'");
}

InputSet parse_input_set(const json& j, const FieldPtr& f) {
    if (!j.contains("input_set")) fail("input_set", "required");
    InputSet s;
    for (const auto& p : j["input_set"]) s.pieces.push_back(parse_piece(p, f));
    if (s.pieces.empty()) fail("input_set", "must be nonempty");
    return s;
}

PolyVec parse_translate(const json& j, const FieldPtr& f) {
    if (!j.contains("translate")) fail("translate", "required in translated_body mode");
    const json& d = j["translate"];
    int max_deg = 0;
    for (const auto& [k, v] : d.items()) max_deg = std::max(max_deg, std::stoi(k));
    PolyVec p;
    std::vector<std::optional<KVec>> coeffs(static_cast<size_t>(max_deg) + 1);
    for (const auto& [k, v] : d.items()) {
        coeffs[static_cast<size_t>(std::stoi(k))] = parse_vector(v, f);
    }
    int dim = -1;
    for (const auto& c : coeffs) {
        if (c) { dim = static_cast<int>(c->size()); break; }
    }
    p.dim = dim;
    for (auto& c : coeffs) {
        p.coeffs.push_back(c ? std::move(*c) : kvec_zero(dim, f));
    }
    return p;
}

LatticeBasis parse_lattice_basis(const json& j, const FieldPtr& f, int m) {
    if (!j.contains("lattice") || (j["lattice"].is_string() && j["lattice"] == "integer")) {
        return LatticeBasis::standard(m, f);
    }
    const json& l = j["lattice"];
    if (l.contains("basis")) {
        KMat b = parse_matrix(l["basis"], f);
        if (b.rows() != m || b.cols() != m) fail("lattice.basis", "must be m x m");
        return LatticeBasis(std::move(b));
    }
    fail("lattice", "expected 'integer' or {'basis': ...}");
}

Schedule parse_schedule(const json& j) {
    if (!j.contains("schedule")) return Schedule::standard();
    const json& s = j["schedule"];
    if (s.contains("t_values")) {
        Schedule sc;
        for (const auto& t : s["t_values"]) sc.t_values.push_back(t.get<double>());
        sc.validate();
        return sc;
    }
    if (s.contains("geometric")) {
        const json& g = s["geometric"];
        return Schedule::geometric(g.value("from", 10.0), g.value("to", 10000.0),
                                   g.value("per_decade", 2));
    }
    fail("schedule", "expected 't_values' or 'geometric'");
}

void parse_embedding(const json& j, EmbeddingConfig& cfg) {
    if (!j.contains("embedding")) return;
    const json& e = j["embedding"];
    cfg.precision = e.value("precision", cfg.precision);
    cfg.sample_density = e.value("sample_density", cfg.sample_density);
    cfg.offset_window = e.value("offset_window", cfg.offset_window);
    cfg.max_samples = e.value("max_samples", cfg.max_samples);
    cfg.full_grid_per_dim = e.value("full_grid_per_dim", cfg.full_grid_per_dim);
    cfg.target_grid_per_dim = e.value("target_grid_per_dim", cfg.target_grid_per_dim);
    cfg.max_targets = e.value("max_targets", cfg.max_targets);
    cfg.completeness_mesh = e.value("completeness_mesh", cfg.completeness_mesh);
    cfg.max_sweep_steps = e.value("max_sweep_steps", cfg.max_sweep_steps);
    if (cfg.precision <= 0 || cfg.sample_density < 1 || cfg.offset_window < 1) {
        fail("embedding", "precision > 0, sample_density >= 1, offset_window >= 1 required");
    }
}

void parse_tolerances(const json& j, VerifyTolerances& tol) {
    if (!j.contains("tolerances")) return;
    const json& t = j["tolerances"];
    tol.sound = t.value("sound", tol.sound);
    tol.complete = t.value("complete", tol.complete);
    tol.fullspace = t.value("fullspace", tol.fullspace);
    tol.nonfull_margin = t.value("nonfull_margin", tol.nonfull_margin);
}

} // namespace

Scenario parse_scenario(const json& j) {
    Scenario s;
    if (j.value("spec_version", 1) != 1) fail("spec_version", "unsupported version");
    s.id = j.value("id", "unnamed");
    s.description = j.value("description", "");
    std::string mode = j.value("mode", "abelian");
    if (mode == "abelian") s.mode = ScenarioMode::Abelian;
    else if (mode == "unipotent") s.mode = ScenarioMode::Unipotent;
    else if (mode == "translated_body") s.mode = ScenarioMode::TranslatedBody;
    else if (mode == "raw") s.mode = ScenarioMode::Raw;
    else fail("mode", "expected abelian | unipotent | translated_body | raw");

    s.field = parse_field(j);
    s.schedule = parse_schedule(j);
    parse_embedding(j, s.embedding);
    parse_tolerances(j, s.tolerances);
    s.lattice_scale = j.value("lattice_scale", 1);
    if (s.lattice_scale < 1) fail("lattice_scale", "must be >= 1");
    s.search_nonconvergence = j.value("search_nonconvergence", false);
    s.nonconvergence_nmax = j.value("nonconvergence_nmax", 6);

    switch (s.mode) {
        case ScenarioMode::Abelian: {
            s.dilation = parse_dilation(j, s.field, "dilation");
            s.input = parse_input_set(j, s.field);
            s.lattice = parse_lattice_basis(j, s.field, s.dilation.out_dim);
            break;
        }
        case ScenarioMode::Unipotent: {
            if (s.lattice_scale != 1) fail("lattice_scale", "not supported in unipotent mode");
            s.group = parse_group(j, s.field);
            s.dilation = parse_dilation(j, s.field, "dilation");
            if (s.dilation.out_dim != s.group->dim()) {
                fail("dilation", "row count must equal the algebra dimension");
            }
            s.input = parse_input_set(j, s.field);
            if (!j.contains("lattice")) fail("lattice", "required");
            if (j["lattice"].is_string() && j["lattice"] == "integer") {
                if (s.group->name() != "heisenberg3") {
                    fail("lattice", "'integer' shorthand needs heisenberg3");
                }
                for (int i = 0; i < 3; ++i) {
                    json triple = json::array({i == 0 ? "1" : "0", i == 1 ? "1" : "0",
                                               i == 2 ? "1" : "0"});
                    s.lattice_generators.push_back(parse_group_element(triple, s.group));
                }
            } else if (j["lattice"].contains("generators")) {
                for (const auto& g : j["lattice"]["generators"]) {
                    s.lattice_generators.push_back(parse_group_element(g, s.group));
                }
            } else {
                fail("lattice", "unipotent mode needs 'integer' or {'generators': ...}");
            }
            break;
        }
        case ScenarioMode::TranslatedBody: {
            s.translate = parse_translate(j, s.field);
            if (!j.contains("body")) fail("body", "required in translated_body mode");
            s.body = parse_piece(j["body"], s.field);
            if (piece_dim(*s.body) != s.translate.dim) {
                fail("body", "body and translate dimensions differ");
            }
            s.lattice = parse_lattice_basis(j, s.field, s.translate.dim);
            break;
        }
        case ScenarioMode::Raw: {
            s.raw_mats = parse_raw_dilation(j, s.field);
            s.input = parse_input_set(j, s.field);
            s.lattice = parse_lattice_basis(j, s.field, s.raw_mats[0].rows());
            break;
        }
    }
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError("parse error in " + path + ": " + e.what());
    }
    return parse_scenario(j);
}

namespace {

LatticeBasis effective_lattice_for(const Scenario& s) {
    switch (s.mode) {
        case ScenarioMode::Unipotent: {
            GroupLattice gl{s.lattice_generators};
            return project_lattice(gl, s.group);
        }
        default: {
            LatticeBasis b = *s.lattice;
            if (s.lattice_scale != 1) b = b.scaled(Rat(s.lattice_scale));
            return b;
        }
    }
}

} // namespace

Prediction predict(const Scenario& s) {
    if (s.mode == ScenarioMode::Raw) {
        throw ScenarioError(
            "scenario is non-proper (raw mode): no analytic prediction; run verify instead");
    }
    Prediction p{DilationFamily{}, effective_lattice_for(s), MultiCosetFamily{}, // placeholders
                 LimitFamily{effective_lattice_for(s), {}, {}, Subspace::zero(1, s.field), 0},
                 {}, Convergence::NotFull, std::nullopt};
    if (s.mode == ScenarioMode::TranslatedBody) {
        TranslatedBodyLimits tb = translated_body_limits(s.translate, p.effective_lattice);
        p.body_limits = tb;
        p.limits = LimitFamily{p.effective_lattice, {}, tb.cbar, tb.vclosed, 1};
        return p;
    }
    p.effective_dilation = s.mode == ScenarioMode::Unipotent
                               ? abelianize_dilation(s.dilation, s.group)
                               : s.dilation;
    p.family = normal_form(p.effective_dilation, s.input);
    p.limits = limit_family(p.family, p.effective_lattice);
    p.sl = slmax(p.family);
    p.classification = classify_convergence(p.family, p.effective_lattice);
    return p;
}

json predict_json(const Scenario& s, const Prediction& p) {
    json j;
    j["spec_version"] = 1;
    j["scenario"] = s.id;
    j["mode"] = mode_name(s.mode);
    json lat = json::array();
    for (int i = 0; i < p.effective_lattice.dim(); ++i) {
        lat.push_back(vector_json(p.effective_lattice.matrix().row(i)));
    }
    j["lattice_rows"] = lat;
    if (s.mode == ScenarioMode::TranslatedBody) {
        j["translate_cbar"] = vector_json(p.body_limits->cbar);
        j["v"] = subspace_json(p.body_limits->v);
        j["vclosed"] = subspace_json(p.body_limits->vclosed);
        return j;
    }
    j["classification"] = convergence_name(p.classification);
    json cosets = json::array();
    for (const auto& c : p.family.cosets) {
        json coeffs = json::array();
        for (const auto& cf : c.translate.coeffs) coeffs.push_back(vector_json(cf));
        cosets.push_back({{"translate_coeffs", coeffs},
                          {"direction", subspace_json(c.direction)}});
    }
    j["cosets"] = cosets;
    json closures = json::array();
    for (const auto& cl : p.limits.closures) closures.push_back(subspace_json(cl));
    j["closures"] = closures;
    json sl = json::array();
    for (const auto& l : p.sl) sl.push_back(subspace_json(l));
    j["slmax"] = sl;
    j["cbar"] = vector_json(p.limits.cbar);
    j["vclosed"] = subspace_json(p.limits.vclosed);
    return j;
}

std::string predict_text(const Scenario& s, const Prediction& p) {
    std::ostringstream out;
    out << "scenario: " << s.id << " (" << mode_name(s.mode) << ")\n";
    auto print_subspace = [&](const Subspace& sp) {
        if (sp.is_zero()) { out << "{0}"; return; }
        if (sp.is_full()) { out << "full K^" << sp.ambient_dim(); return; }
        out << "span{";
        for (size_t i = 0; i < sp.basis().size(); ++i) {
            if (i) out << ", ";
            out << "(";
            for (size_t jx = 0; jx < sp.basis()[i].size(); ++jx) {
                if (jx) out << ", ";
                out << sp.basis()[i][jx].str();
            }
            out << ")";
        }
        out << "}";
    };
    if (s.mode == ScenarioMode::TranslatedBody) {
        out << "translate family a(t) + C; limits are pi(d + C) for d in cbar + V^Gamma\n";
        out << "  cbar = (";
        for (size_t i = 0; i < p.body_limits->cbar.size(); ++i) {
            if (i) out << ", ";
            out << p.body_limits->cbar[i].str();
        }
        out << ")\n  V = ";
        print_subspace(p.body_limits->v);
        out << "\n  V^Gamma = ";
        print_subspace(p.body_limits->vclosed);
        out << "\n";
        return out.str();
    }
    out << "multi-coset normal form: " << p.family.size() << " coset(s)\n";
    for (int jx = 0; jx < p.family.size(); ++jx) {
        out << "  coset " << jx + 1 << ": L = ";
        print_subspace(p.family.cosets[jx].direction);
        out << ", L^Gamma = ";
        print_subspace(p.limits.closures[jx]);
        out << "\n";
    }
    out << "SL_max: " << p.sl.size() << " subspace(s)\n";
    out << "V^(Gamma^n) = ";
    print_subspace(p.limits.vclosed);
    out << "\nclassification: " << convergence_name(p.classification) << "\n";
    return out.str();
}

namespace {

double tail_max(const std::vector<VerifyRow>& rows, double VerifyRow::*field) {
    double worst = 0;
    size_t start = rows.size() / 2;
    for (size_t i = start; i < rows.size(); ++i) worst = std::max(worst, rows[i].*field);
    return worst;
}

double all_min(const std::vector<VerifyRow>& rows, double VerifyRow::*field) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) best = std::min(best, r.*field);
    return best;
}

VerificationReport verify_raw(const Scenario& s) {
    VerificationReport r;
    r.scenario_id = s.id;
    r.mode = mode_name(s.mode);
    r.analytic = json::object();
    LatticeBasis b = effective_lattice_for(s);
    EmbeddedLattice lat = embed_lattice(b, s.embedding);
    EmbeddedDilation edil = embed_raw_dilation(s.raw_mats, s.embedding);
    TorusCloud grid = full_grid(lat.m, s.embedding.full_grid_per_dim);
    for (double t : s.schedule.t_values) {
        auto start = std::chrono::steady_clock::now();
        TorusCloud cloud;
        cloud.dim = lat.m;
        for (const auto& piece : s.input.pieces) {
            cloud.append(sample_piece(piece, edil, t, lat, s.embedding));
        }
        VerifyRow row;
        row.t = t;
        row.samples_used = cloud.count();
        row.sound_dh = hausdorff(cloud, grid, lat); // raw curve: distance to full space
        row.fullspace_dh = row.sound_dh;
        row.worst_target = 0;
        row.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
        r.rows.push_back(row);
    }
    return r;
}

} // namespace

VerificationReport run_verify(const Scenario& s) {
    auto t0 = std::chrono::steady_clock::now();
    if (s.mode == ScenarioMode::Raw) {
        VerificationReport r = verify_raw(s);
        r.total_wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        return r;
    }

    Prediction p = predict(s);
    VerificationReport r;
    r.scenario_id = s.id;
    r.mode = mode_name(s.mode);
    r.analytic = predict_json(s, p);

    AbelianVerifyInputs in;
    in.limits = &p.limits;
    if (s.mode == ScenarioMode::TranslatedBody) {
        in.translate = &s.translate;
        in.body = &*s.body;
    } else {
        in.dil = &p.effective_dilation;
        in.input = &s.input;
        in.family = &p.family;
    }
    AbelianVerifyResult ab = verify_abelian(in, s.schedule, s.embedding);

    r.completeness_worst = ab.completeness.worst;
    r.completeness_targets = ab.completeness.targets;
    r.verdict_sound = tail_max(ab.rows, &VerifyRow::sound_dh) < s.tolerances.sound;
    r.verdict_complete = ab.completeness.worst < s.tolerances.complete;

    if (s.mode == ScenarioMode::Unipotent) {
        r.predicted_full = p.classification == Convergence::ConvergesStronglyToFull;
        r.ab_rows = ab.rows;
        if (s.group->name() == "heisenberg3") {
            auto hrows = verify_heis_fullspace(s.input, s.dilation, s.group, s.schedule,
                                               s.embedding);
            for (size_t i = 0; i < hrows.size(); ++i) {
                VerifyRow row;
                row.t = hrows[i].t;
                row.sound_dh = hrows[i].fullspace_dh;
                row.fullspace_dh = hrows[i].fullspace_dh;
                row.worst_target = ab.rows[i].worst_target;
                row.samples_used = hrows[i].samples_used;
                row.wall_ms = hrows[i].wall_ms + ab.rows[i].wall_ms;
                r.rows.push_back(row);
            }
        } else {
            r.rows = ab.rows;
        }
        if (r.predicted_full) {
            r.verdict_fullspace = tail_max(r.rows, &VerifyRow::fullspace_dh) <
                                  s.tolerances.fullspace;
        } else {
            r.fullspace_margin = all_min(r.rows, &VerifyRow::fullspace_dh);
        }
    } else if (s.mode == ScenarioMode::TranslatedBody) {
        r.rows = ab.rows;
        r.predicted_full = ab.limit_is_fullspace;
        if (ab.limit_is_fullspace) {
            r.verdict_fullspace = tail_max(r.rows, &VerifyRow::fullspace_dh) <
                                  s.tolerances.fullspace;
        } else {
            r.fullspace_margin = all_min(r.rows, &VerifyRow::fullspace_dh);
        }
    } else {
        r.rows = ab.rows;
        r.predicted_full = p.classification == Convergence::ConvergesStronglyToFull;
        if (r.predicted_full) {
            r.verdict_fullspace = tail_max(r.rows, &VerifyRow::fullspace_dh) <
                                  s.tolerances.fullspace;
        } else {
            r.fullspace_margin = all_min(r.rows, &VerifyRow::fullspace_dh);
        }
    }

    if (s.search_nonconvergence) {
        if (s.mode == ScenarioMode::TranslatedBody) {
            r.nonconvergence_n = nonconvergence_index_body(
                s.translate, *s.body, *s.lattice, s.nonconvergence_nmax, s.schedule,
                s.embedding, s.tolerances.nonfull_margin);
        } else if (p.classification == Convergence::NotFull) {
            r.nonconvergence_n = nonconvergence_index(
                p.family, p.effective_lattice, s.nonconvergence_nmax, s.schedule, s.embedding,
                s.tolerances.nonfull_margin);
        }
    }

    r.total_wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

namespace {

const char* kSample64Translates = R"json({
  "spec_version": 1,
  "id": "sample64_translates",
  "description": "horizontal-line translate family on the 2-torus; limits are all horizontal circles",
  "mode": "abelian",
  "lattice": "integer",
  "dilation": {"1": [["1", "0"], ["0", "1"]]},
  "input_set": [{"polytope": [["0", "1"], ["1", "1"]]}],
  "embedding": {"sample_density": 200, "max_samples": 100000, "full_grid_per_dim": 40},
  "tolerances": {"sound": 0.02, "complete": 0.05}
})json";

const char* kSample64LinesRaw = R"json({
  "spec_version": 1,
  "id": "sample64_lines_raw",
  "description": "non-proper line family y = t x, numeric d_H curves only",
  "mode": "raw",
  "lattice": "integer",
  "raw_dilation": {"0": [["1"], ["0"]], "1": [["0"], ["1"]]},
  "input_set": [{"polytope": [["-2"], ["2"]]}],
  "embedding": {"sample_density": 200, "max_samples": 500000, "full_grid_per_dim": 40}
})json";

const char* kSample63Interval = R"json({
  "spec_version": 1,
  "id": "sample63_interval",
  "description": "interval translate family t + [0,2] on the circle",
  "mode": "translated_body",
  "lattice": "integer",
  "translate": {"1": ["1"]},
  "body": {"polytope": [["0"], ["2"]]},
  "embedding": {"sample_density": 200, "max_samples": 100000, "full_grid_per_dim": 64},
  "tolerances": {"sound": 0.05, "complete": 0.05, "fullspace": 0.05, "nonfull_margin": 0.1},
  "search_nonconvergence": true,
  "nonconvergence_nmax": 6
})json";

const char* kSegmentParabola = R"json({
  "spec_version": 1,
  "id": "segment_parabola_dilation",
  "description": "segment [0,1] under (t x, t^2 x); the whole torus is the only limit",
  "mode": "abelian",
  "lattice": "integer",
  "dilation": {"1": [["1"], ["0"]], "2": [["0"], ["1"]]},
  "input_set": [{"polytope": [["0"], ["1"]]}],
  "embedding": {"sample_density": 200, "max_samples": 2000000, "full_grid_per_dim": 40},
  "tolerances": {"sound": 0.05, "complete": 0.05, "fullspace": 0.05}
})json";

const char* kVerticalCircles = R"json({
  "spec_version": 1,
  "id": "vertical_circles_sweep",
  "description": "segment (1,0)-(1,1) under t*id; limits are all vertical circles",
  "mode": "abelian",
  "lattice": "integer",
  "dilation": {"1": [["1", "0"], ["0", "1"]]},
  "input_set": [{"polytope": [["1", "0"], ["1", "1"]]}],
  "embedding": {"sample_density": 200, "max_samples": 100000, "full_grid_per_dim": 40},
  "tolerances": {"sound": 0.05, "complete": 0.05}
})json";

const char* kHeisIrrational = R"json({
  "spec_version": 1,
  "id": "heis_orbit_irrational",
  "description": "Heisenberg orbit segment with abelianized direction (1, sqrt2)",
  "mode": "unipotent",
  "field": {"minpoly": ["-2", "0", "1"], "root_between": ["1", "2"]},
  "group": "heisenberg3",
  "lattice": "integer",
  "dilation": {"1": [["1"], [["0", "1"]], ["0"]]},
  "input_set": [{"polytope": [["0"], ["1"]]}],
  "embedding": {"sample_density": 200, "max_samples": 1000000, "full_grid_per_dim": 20},
  "tolerances": {"sound": 0.05, "complete": 0.05, "fullspace": 0.1}
})json";

const char* kHeisRational = R"json({
  "spec_version": 1,
  "id": "heis_orbit_rational",
  "description": "Heisenberg orbit segment with rational abelianized direction (1, 1)",
  "mode": "unipotent",
  "field": {"minpoly": ["-2", "0", "1"], "root_between": ["1", "2"]},
  "group": "heisenberg3",
  "lattice": "integer",
  "dilation": {"1": [["1"], ["1"], ["0"]]},
  "input_set": [{"polytope": [["0"], ["1"]]}],
  "embedding": {"sample_density": 200, "max_samples": 1000000, "full_grid_per_dim": 20},
  "tolerances": {"sound": 0.05, "complete": 0.05, "fullspace": 0.1}
})json";

const char* kKssCurvePolytope = R"json({
  "spec_version": 1,
  "id": "kss_style_curve_polytope",
  "description": "triangle and a point under a sqrt2-direction dilation in K^3; one proper subtorus limit",
  "mode": "abelian",
  "field": {"minpoly": ["-2", "0", "1"], "root_between": ["1", "2"]},
  "lattice": "integer",
  "dilation": {"1": [["1", "1"], [["0", "1"], ["0", "1"]], ["0", "0"]]},
  "input_set": [
    {"polytope": [["0", "0"], ["1", "0"], ["0", "1"]]},
    {"points": [["2", "3"]]}
  ],
  "embedding": {"sample_density": 200, "max_samples": 1000000, "full_grid_per_dim": 16},
  "tolerances": {"sound": 0.05, "complete": 0.05, "nonfull_margin": 0.1},
  "search_nonconvergence": true,
  "nonconvergence_nmax": 4
})json";

} // namespace

std::vector<BundledScenario> bundled_scenarios() {
    return {
        {"sample64_translates", "translate family of horizontal lines in R^2/Z^2"},
        {"sample64_lines_raw", "non-proper line family y = t x (raw d_H curves)"},
        {"sample63_interval", "interval translate family t + [0,2] on R/Z"},
        {"segment_parabola_dilation", "segment under (t x, t^2 x): converges strongly to the torus"},
        {"vertical_circles_sweep", "segment under t*id: limits are the vertical circles"},
        {"heis_orbit_irrational", "Heisenberg orbit, abelianized direction (1, sqrt2): full"},
        {"heis_orbit_rational", "Heisenberg orbit, abelianized direction (1, 1): proper limits"},
        {"kss_style_curve_polytope", "triangle + point pieces with a sqrt2 direction in K^3"},
    };
}

nlohmann::json bundled_scenario_json(const std::string& id) {
    const char* text = nullptr;
    if (id == "sample64_translates") text = kSample64Translates;
    else if (id == "sample64_lines_raw") text = kSample64LinesRaw;
    else if (id == "sample63_interval") text = kSample63Interval;
    else if (id == "segment_parabola_dilation") text = kSegmentParabola;
    else if (id == "vertical_circles_sweep") text = kVerticalCircles;
    else if (id == "heis_orbit_irrational") text = kHeisIrrational;
    else if (id == "heis_orbit_rational") text = kHeisRational;
    else if (id == "kss_style_curve_polytope") text = kKssCurvePolytope;
    if (!text) throw ScenarioError("unknown bundled scenario: " + id);
    return json::parse(text);
}

} // namespace nilflow
