#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nilflow/numeric.hpp"

namespace nilflow {

struct VerificationReport {
    std::string scenario_id;
    std::string mode;
    nlohmann::json analytic; // prediction summary; empty object for raw mode

    // One row per scheduled t. For unipotent scenarios sound_dh carries the
    // nilmanifold distance to the fullspace grid; the abelianized soundness
    // rows are kept separately.
    std::vector<VerifyRow> rows;
    std::vector<VerifyRow> ab_rows; // unipotent mode only

    double completeness_worst = 0.0;
    std::size_t completeness_targets = 0;

    bool predicted_full = false;
    std::optional<bool> verdict_sound;
    std::optional<bool> verdict_complete;
    std::optional<bool> verdict_fullspace;
    std::optional<double> fullspace_margin; // min over rows, NotFull evidence
    std::optional<int> nonconvergence_n;

    double total_wall_ms = 0.0;

    bool has_verdicts() const;
    bool all_pass() const;
};

// CSV with the stable column schema t,sound_dH,worst_target_dist,samples_used,wall_ms
std::string report_csv(const VerificationReport& r);

nlohmann::json report_json(const VerificationReport& r);

// Minimal d_H-vs-t polyline plot on a log-t axis.
std::string report_svg(const VerificationReport& r);

// Write via a temp file and rename, so partial reports never appear.
void write_file_atomic(const std::string& path, const std::string& content);

} // namespace nilflow
