#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "opensoc/core.hpp"

namespace opensoc {

OPENSOC_DEFINE_ERROR(UnrecognizedIdentifier);

/// Whatever could be recovered from raw model text; any field may be absent.
struct ExtractionResult {
    std::optional<ThreatLabel> threat;
    std::optional<MitreTechniqueId> mitre;
    bool mitre_not_applicable = false;  // MITRE_ID line present with N/A
    std::optional<Severity> severity;
    std::optional<int> risk_score;
    std::optional<std::string> evidence;
    std::optional<std::string> recommendation;
    std::string raw;
    std::vector<std::string> diagnostics;

    /// Number of the six labels recovered (0..6).
    int field_count() const;
    bool empty() const { return field_count() == 0; }

    /// The full analysis when all six labels were recovered and valid.
    std::optional<ThreatAnalysis> to_analysis() const;
};

/// Tolerant label-based extraction. Labels are matched case-insensitively at
/// line start (markdown bullets and bold allowed, `THREAT_TYPE`, `Threat Type`,
/// `threat-type` all accepted); the first valid occurrence of each wins.
/// Never throws.
ExtractionResult extract_fields(std::string_view raw);

/// Accepts T1190, t1190, T1190.001, "Technique 1190", "T 1190", "MITRE T1190",
/// and bare four-digit numbers. Throws UnrecognizedIdentifier otherwise.
MitreTechniqueId normalize_mitre(std::string_view raw_id);

enum class MitreMatchMode { Base, Strict };

bool mitre_match(const MitreTechniqueId& predicted, const MitreTechniqueId& truth,
                 MitreMatchMode mode);

}  // namespace opensoc
