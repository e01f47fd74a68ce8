#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "opensoc/core.hpp"
#include "opensoc/extraction.hpp"

namespace opensoc {

/// Export column contract shared by the service and the eval CSV.
inline constexpr std::string_view kCsvHeader =
    "raw_log,threat_type,mitre_id,severity,risk_score,evidence,recommendation";

/// {threat_type, mitre_id, severity, risk_score, evidence, recommendation};
/// absent fields are null, a not-applicable MITRE id is "N/A".
nlohmann::ordered_json fields_to_json(const ExtractionResult& r);
nlohmann::ordered_json fields_to_json(const ThreatAnalysis& a);

/// One CSV line (no terminator); absent fields are empty cells.
std::string csv_row(std::string_view raw_log, const ExtractionResult& r);

/// Row for an entry whose backend call failed: only raw_log and the evidence
/// cell ("[backend error] <kind>: <message>") are filled.
std::string csv_error_row(std::string_view raw_log, std::string_view kind,
                          std::string_view message);

}  // namespace opensoc
