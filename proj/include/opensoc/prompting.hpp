#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "opensoc/core.hpp"

namespace opensoc {

OPENSOC_DEFINE_ERROR(EmptyInput);

/// The six output labels, in render order.
inline constexpr std::array<std::string_view, 6> kOutputLabels = {
    "THREAT_TYPE", "MITRE_ID", "SEVERITY", "RISK_SCORE", "EVIDENCE", "RECOMMENDATION"};

/// Alpaca-style three-section layout around a fixed system instruction.
struct PromptTemplate {
    std::string version;
    std::string system_instruction;

    /// Versioned built-in template shared by dataset generation and inference.
    static const PromptTemplate& standard();

    std::string prefix() const;  // everything before the log line
    static std::string_view suffix();  // everything after it
};

std::string build_prompt(std::string_view entry_raw,
                         const PromptTemplate& tmpl = PromptTemplate::standard());

/// Inverse of build_prompt: the embedded log text, or nullopt if `prompt`
/// was not produced by `tmpl`.
std::optional<std::string> split_prompt(std::string_view prompt,
                                        const PromptTemplate& tmpl = PromptTemplate::standard());

/// Six lines `LABEL: value`, newline-separated, no trailing newline.
std::string render_output(const ThreatAnalysis& analysis);

}  // namespace opensoc
