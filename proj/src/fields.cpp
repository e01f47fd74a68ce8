#include "opensoc/fields.hpp"

#include <array>

#include "opensoc/logparse.hpp"

namespace opensoc {

namespace {

std::string join_cells(const std::array<std::string, 7>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(cells[i]);
    }
    return out;
}

}  // namespace

nlohmann::ordered_json fields_to_json(const ExtractionResult& r) {
    auto opt = [](const auto& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
    nlohmann::ordered_json o;
    o["threat_type"] = r.threat ? nlohmann::ordered_json(r.threat->render()) : nlohmann::ordered_json();
    if (r.mitre)
        o["mitre_id"] = r.mitre->render();
    else
        o["mitre_id"] = r.mitre_not_applicable ? nlohmann::ordered_json("N/A") : nlohmann::ordered_json();
    o["severity"] = r.severity ? nlohmann::ordered_json(to_string(*r.severity)) : nlohmann::ordered_json();
    o["risk_score"] = opt(r.risk_score);
    o["evidence"] = opt(r.evidence);
    o["recommendation"] = opt(r.recommendation);
    return o;
}

nlohmann::ordered_json fields_to_json(const ThreatAnalysis& a) {
    nlohmann::ordered_json o;
    o["threat_type"] = a.threat.render();
    o["mitre_id"] = a.mitre ? a.mitre->render() : "N/A";
    o["severity"] = to_string(a.severity);
    o["risk_score"] = a.risk_score;
    o["evidence"] = a.evidence;
    o["recommendation"] = a.recommendation;
    return o;
}

std::string csv_row(std::string_view raw_log, const ExtractionResult& r) {
    std::array<std::string, 7> cells;
    cells[0] = std::string(raw_log);
    if (r.threat) cells[1] = r.threat->render();
    if (r.mitre)
        cells[2] = r.mitre->render();
    else if (r.mitre_not_applicable)
        cells[2] = "N/A";
    if (r.severity) cells[3] = std::string(to_string(*r.severity));
    if (r.risk_score) cells[4] = std::to_string(*r.risk_score);
    if (r.evidence) cells[5] = *r.evidence;
    if (r.recommendation) cells[6] = *r.recommendation;
    return join_cells(cells);
}

std::string csv_error_row(std::string_view raw_log, std::string_view kind,
                          std::string_view message) {
    std::array<std::string, 7> cells;
    cells[0] = std::string(raw_log);
    cells[5] = "[backend error] " + std::string(kind) + ": " + std::string(message);
    return join_cells(cells);
}

}  // namespace opensoc
