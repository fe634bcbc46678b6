#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "nilflow/scenario.hpp"

namespace {

using namespace nilflow;

Scenario load_by_name(const std::string& name) {
    if (std::filesystem::exists(name)) {
        return load_scenario_file(name);
    }
    return parse_scenario(bundled_scenario_json(name));
}

int cmd_predict(const std::string& name, const std::string& out_path) {
    Scenario s = load_by_name(name);
    Prediction p = predict(s);
    std::cout << predict_text(s, p);
    std::string payload = predict_json(s, p).dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << payload;
    } else {
        write_file_atomic(out_path, payload);
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

int cmd_verify(const std::string& name, const std::string& out_dir, bool svg,
               int lattice_scale) {
    Scenario s = load_by_name(name);
    if (lattice_scale > 1) s.lattice_scale = lattice_scale;
    VerificationReport r = run_verify(s);

    std::filesystem::create_directories(out_dir);
    auto path = [&](const std::string& suffix) {
        return (std::filesystem::path(out_dir) / (s.id + suffix)).string();
    };
    write_file_atomic(path("_report.json"), report_json(r).dump(2) + "\n");
    write_file_atomic(path("_table.csv"), report_csv(r));
    if (svg) write_file_atomic(path("_plot.svg"), report_svg(r));

    std::cout << "scenario: " << r.scenario_id << " (" << r.mode << ")\n";
    for (const auto& row : r.rows) {
        std::cout << "  t=" << row.t << "  sound_dH=" << row.sound_dh
                  << "  worst_target=" << row.worst_target << "  samples=" << row.samples_used
                  << "\n";
    }
    auto verdict = [](const std::optional<bool>& v) {
        return !v ? "n/a" : (*v ? "pass" : "FAIL");
    };
    std::cout << "verdicts: sound=" << verdict(r.verdict_sound)
              << " complete=" << verdict(r.verdict_complete)
              << " fullspace=" << verdict(r.verdict_fullspace) << "\n";
    if (r.fullspace_margin) {
        std::cout << "fullspace margin (NotFull evidence): " << *r.fullspace_margin << "\n";
    }
    if (r.nonconvergence_n) {
        std::cout << "nonconvergence certificate: N=" << *r.nonconvergence_n << "\n";
    }
    std::cout << "reports written to " << out_dir << "\n";
    if (!r.has_verdicts()) return 0;
    return r.all_pass() ? 0 : 2;
}

int cmd_closure(const std::string& subspace_json, const std::string& lattice_json,
                const std::string& field_json) {
    FieldPtr f = field_json.empty() ? NumberField::rationals()
                                    : parse_number_field(nlohmann::json::parse(field_json));
    nlohmann::json rows = nlohmann::json::parse(subspace_json);
    std::vector<KVec> gens;
    for (const auto& r : rows) gens.push_back(parse_vector(r, f));
    if (gens.empty()) throw ScenarioError("closure: subspace needs at least one generator");
    int m = static_cast<int>(gens[0].size());
    Subspace l = Subspace::span(m, gens, f);
    LatticeBasis b = lattice_json.empty()
                         ? LatticeBasis::standard(m, f)
                         : LatticeBasis(parse_matrix(nlohmann::json::parse(lattice_json), f));
    Subspace closure = rational_closure(l, b);
    std::cout << "rank " << closure.rank() << (closure.is_full() ? " (full space)" : "") << "\n";
    for (const auto& row : closure.basis()) {
        std::cout << "  (";
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) std::cout << ", ";
            std::cout << row[i].str();
        }
        std::cout << ")\n";
    }
    return 0;
}

int cmd_scenarios() {
    for (const auto& b : bundled_scenarios()) {
        std::cout << b.id << "  -  " << b.description << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nilflow: Hausdorff limits of polynomial dilations on tori and nilmanifolds"};
    app.require_subcommand(1);

    std::string name, out_path, out_dir = ".", subspace_arg, lattice_arg, field_arg;
    bool svg = false;
    int lattice_scale = 0;

    auto* predict_cmd = app.add_subcommand("predict", "print the analytic limit description");
    predict_cmd->add_option("scenario", name, "scenario file or bundled id")->required();
    predict_cmd->add_option("--out", out_path, "write the JSON summary to a file");

    auto* verify_cmd = app.add_subcommand("verify", "run the numeric convergence harness");
    verify_cmd->add_option("scenario", name, "scenario file or bundled id")->required();
    verify_cmd->add_option("--out", out_dir, "report output directory");
    verify_cmd->add_flag("--svg", svg, "also emit a d_H-vs-t SVG plot");
    verify_cmd->add_option("--lattice-scale", lattice_scale,
                           "replace Gamma by N*Gamma before the run");

    auto* closure_cmd = app.add_subcommand("closure", "rational closure of a subspace");
    closure_cmd->add_option("--subspace", subspace_arg, "JSON rows spanning the subspace")
        ->required();
    closure_cmd->add_option("--lattice", lattice_arg, "JSON lattice basis matrix (default Z^m)");
    closure_cmd->add_option("--field", field_arg,
                            "JSON number field {\"minpoly\": [...], \"root_between\": [lo, hi]}");

    auto* scenarios_cmd = app.add_subcommand("scenarios", "list bundled scenarios");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*predict_cmd) return cmd_predict(name, out_path);
        if (*verify_cmd) return cmd_verify(name, out_dir, svg, lattice_scale);
        if (*closure_cmd) return cmd_closure(subspace_arg, lattice_arg, field_arg);
        if (*scenarios_cmd) return cmd_scenarios();
    } catch (const nilflow::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
