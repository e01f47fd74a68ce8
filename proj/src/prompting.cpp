#include "opensoc/prompting.hpp"

namespace opensoc {

namespace {

constexpr std::string_view kPreamble =
    "Below is an instruction that describes a task, paired with an input that provides "
    "further context. Write a response that appropriately completes the request.\n\n"
    "### Instruction:\n";
constexpr std::string_view kInputHeader = "\n\n### Input:\n";
constexpr std::string_view kResponseHeader = "\n\n### Response:\n";

}  // namespace

const PromptTemplate& PromptTemplate::standard() {
    static const PromptTemplate tmpl{
        "soc-v1",
        "You are a security operations analyst. Analyze the log entry and answer with exactly "
        "six lines: THREAT_TYPE, MITRE_ID, SEVERITY (LOW, MEDIUM, HIGH or CRITICAL), "
        "RISK_SCORE (0-100), EVIDENCE and RECOMMENDATION, each written as LABEL: value."};
    return tmpl;
}

std::string PromptTemplate::prefix() const {
    std::string out(kPreamble);
    out += system_instruction;
    out += kInputHeader;
    return out;
}

std::string_view PromptTemplate::suffix() { return kResponseHeader; }

std::string build_prompt(std::string_view entry_raw, const PromptTemplate& tmpl) {
    if (trim(entry_raw).empty()) throw EmptyInput("cannot build a prompt for an empty log entry");
    std::string out = tmpl.prefix();
    out += entry_raw;
    out += PromptTemplate::suffix();
    return out;
}

std::optional<std::string> split_prompt(std::string_view prompt, const PromptTemplate& tmpl) {
    // The instruction is fixed and the response header closes the prompt, so
    // the input is exactly what lies between the two; its own content never
    // has to be scanned for delimiters.
    const std::string head = tmpl.prefix();
    const std::string_view tail = PromptTemplate::suffix();
    if (prompt.size() < head.size() + tail.size() || !prompt.starts_with(head) ||
        !prompt.ends_with(tail))
        return std::nullopt;
    return std::string(prompt.substr(head.size(), prompt.size() - head.size() - tail.size()));
}

std::string render_output(const ThreatAnalysis& a) {
    std::string out;
    out += "THREAT_TYPE: " + a.threat.render() + "\n";
    out += "MITRE_ID: " + (a.mitre ? a.mitre->render() : std::string("N/A")) + "\n";
    out += "SEVERITY: " + std::string(to_string(a.severity)) + "\n";
    out += "RISK_SCORE: " + std::to_string(a.risk_score) + "\n";
    out += "EVIDENCE: " + a.evidence + "\n";
    out += "RECOMMENDATION: " + a.recommendation;
    return out;
}

}  // namespace opensoc
