#include "nilflow/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nilflow {

bool VerificationReport::has_verdicts() const {
    return verdict_sound.has_value() || verdict_complete.has_value() ||
           verdict_fullspace.has_value();
}

bool VerificationReport::all_pass() const {
    if (verdict_sound && !*verdict_sound) return false;
    if (verdict_complete && !*verdict_complete) return false;
    if (verdict_fullspace && !*verdict_fullspace) return false;
    return true;
}

namespace {

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

} // namespace

std::string report_csv(const VerificationReport& r) {
    std::ostringstream out;
    out << "t,sound_dH,worst_target_dist,samples_used,wall_ms\n";
    for (const auto& row : r.rows) {
        out << fmt(row.t) << "," << fmt(row.sound_dh) << "," << fmt(row.worst_target) << ","
            << row.samples_used << "," << fmt(row.wall_ms) << "\n";
    }
    return out.str();
}

namespace {

nlohmann::json rows_json(const std::vector<VerifyRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : rows) {
        arr.push_back({{"t", row.t},
                       {"sound_dH", row.sound_dh},
                       {"fullspace_dH", row.fullspace_dh},
                       {"worst_target_dist", row.worst_target},
                       {"samples_used", row.samples_used},
                       {"wall_ms", row.wall_ms}});
    }
    return arr;
}

} // namespace

nlohmann::json report_json(const VerificationReport& r) {
    nlohmann::json j;
    j["spec_version"] = 1;
    j["scenario"] = r.scenario_id;
    j["mode"] = r.mode;
    j["analytic"] = r.analytic;
    j["rows"] = rows_json(r.rows);
    if (!r.ab_rows.empty()) j["abelianized_rows"] = rows_json(r.ab_rows);
    j["completeness"] = {{"worst_target_dist", r.completeness_worst},
                         {"targets", r.completeness_targets}};
    nlohmann::json verdicts = nlohmann::json::object();
    if (r.verdict_sound) verdicts["sound"] = *r.verdict_sound;
    if (r.verdict_complete) verdicts["complete"] = *r.verdict_complete;
    if (r.verdict_fullspace) verdicts["fullspace"] = *r.verdict_fullspace;
    j["verdicts"] = verdicts;
    j["predicted_full"] = r.predicted_full;
    if (r.fullspace_margin) j["fullspace_margin"] = *r.fullspace_margin;
    if (r.nonconvergence_n) j["nonconvergence_index"] = *r.nonconvergence_n;
    j["total_wall_ms"] = r.total_wall_ms;
    return j;
}

std::string report_svg(const VerificationReport& r) {
    const int width = 640, height = 400, margin = 50;
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    if (r.rows.size() >= 2) {
        double tmin = std::log10(r.rows.front().t);
        double tmax = std::log10(r.rows.back().t);
        double dmax = 1e-9;
        for (const auto& row : r.rows) {
            dmax = std::max(dmax, std::max(row.sound_dh, row.worst_target));
        }
        auto xpix = [&](double t) {
            return margin + (std::log10(t) - tmin) / std::max(tmax - tmin, 1e-9) *
                                (width - 2 * margin);
        };
        auto ypix = [&](double d) { return height - margin - d / dmax * (height - 2 * margin); };
        auto polyline = [&](const char* color, auto get) {
            out << "<polyline fill=\"none\" stroke=\"" << color
                << "\" stroke-width=\"2\" points=\"";
            for (const auto& row : r.rows) {
                out << fmt(xpix(row.t)) << "," << fmt(ypix(get(row))) << " ";
            }
            out << "\"/>\n";
        };
        polyline("#1f77b4", [](const VerifyRow& row) { return row.sound_dh; });
        polyline("#d62728", [](const VerifyRow& row) { return row.worst_target; });
        out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
            << width - margin << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
            << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
            << "\" font-size=\"12\" text-anchor=\"middle\">log10 t</text>\n";
        out << "<text x=\"" << margin << "\" y=\"" << margin - 10 << "\" font-size=\"12\">d_H"
            << " (max " << fmt(dmax) << ")</text>\n";
        out << "<text x=\"" << width - margin << "\" y=\"" << margin - 10
            << "\" font-size=\"12\" text-anchor=\"end\" fill=\"#1f77b4\">sound</text>\n";
        out << "<text x=\"" << width - margin << "\" y=\"" << margin + 6
            << "\" font-size=\"12\" text-anchor=\"end\" fill=\"#d62728\">targets</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open for writing: " + tmp);
        out << content;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw Error("cannot rename report into place: " + path);
    }
}

} // namespace nilflow
