#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nilflow/report.hpp"

namespace nilflow {

enum class ScenarioMode { Abelian, Unipotent, TranslatedBody, Raw };

const char* mode_name(ScenarioMode m);

/// One fully parsed experiment: field, group, lattice, dilation (or translate
/// family), input set, schedule, embedding and verdict configuration.
struct Scenario {
    std::string id;
    std::string description;
    ScenarioMode mode = ScenarioMode::Abelian;

    FieldPtr field; // shared theta for all exact data

    // unipotent mode
    SpecPtr group;
    std::vector<GroupElement> lattice_generators;

    // abelian / translated-body / raw modes
    std::optional<LatticeBasis> lattice;

    DilationFamily dilation;    // abelian and unipotent modes
    std::vector<KMat> raw_mats; // raw mode, degrees 0..d
    InputSet input;

    PolyVec translate;                 // translated-body mode
    std::optional<InputPiece> body;    // translated-body mode

    Schedule schedule = Schedule::standard();
    EmbeddingConfig embedding;
    VerifyTolerances tolerances;

    int lattice_scale = 1;
    bool search_nonconvergence = false;
    int nonconvergence_nmax = 6;
};

Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario_file(const std::string& path);

/// Exact analytic output of the prediction pipeline. For unipotent scenarios
/// everything below lives in the abelianization.
struct Prediction {
    DilationFamily effective_dilation;
    LatticeBasis effective_lattice;
    MultiCosetFamily family;
    LimitFamily limits;
    std::vector<Subspace> sl;
    Convergence classification = Convergence::NotFull;
    std::optional<TranslatedBodyLimits> body_limits; // translated-body mode
};

// Throws ScenarioError for raw-mode scenarios (no analytic prediction).
Prediction predict(const Scenario& s);

// Deterministic machine-readable form of the prediction.
nlohmann::json predict_json(const Scenario& s, const Prediction& p);

// Human-oriented rendering of the same data.
std::string predict_text(const Scenario& s, const Prediction& p);

// Full pipeline: predict (unless raw) then run the numeric harness.
VerificationReport run_verify(const Scenario& s);

struct BundledScenario {
    std::string id;
    std::string description;
};

std::vector<BundledScenario> bundled_scenarios();
nlohmann::json bundled_scenario_json(const std::string& id);

// JSON helpers shared with the CLI.
FieldPtr parse_number_field(const nlohmann::json& field_decl);
Scalar parse_scalar(const nlohmann::json& j, const FieldPtr& f);
KVec parse_vector(const nlohmann::json& j, const FieldPtr& f);
KMat parse_matrix(const nlohmann::json& j, const FieldPtr& f);
nlohmann::json scalar_json(const Scalar& s);
nlohmann::json vector_json(const KVec& v);
nlohmann::json subspace_json(const Subspace& s);

} // namespace nilflow
