#pragma once

#include <memory>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "opensoc/core.hpp"
#include "opensoc/logparse.hpp"

namespace opensoc {

/// Fields of a LogEntry a pattern is evaluated against. Unstructured
/// entries expose their whole text under every target.
enum MatchTarget : unsigned {
    kTargetRequest = 1u << 0,    // path?query
    kTargetUserAgent = 1u << 1,
    kTargetReferrer = 1u << 2,
    kTargetMessage = 1u << 3,    // auth-event payload / unstructured text
    kTargetAll = 0xFu,
};

struct SignaturePattern {
    std::string expression;  // ECMAScript regex, matched case-insensitively
    unsigned targets = kTargetRequest;
    // Optional request constraints; when set the pattern only fires on
    // access-log entries with this method and one of these statuses.
    std::optional<std::string> method;
    std::vector<int> statuses;

    SignaturePattern() = default;
    SignaturePattern(std::string expr, unsigned target_mask);

    const std::regex& compiled() const;

private:
    std::shared_ptr<const std::regex> regex_;
};

struct SignatureRule {
    ThreatCategory category = ThreatCategory::Benign;
    std::optional<std::string> subtype;
    std::vector<SignaturePattern> patterns;
    std::optional<MitreTechniqueId> mitre;
    Severity severity = Severity::Low;
    int base_risk = 0;
    // A reinforcing rule wins only when nothing of higher priority fires;
    // otherwise its indicators are added to the winning rule's evidence.
    bool reinforces = false;
};

/// Position of a category in the single-label precedence order (0 = highest).
int category_priority(ThreatCategory c);

/// Immutable, priority-ordered rule list.
class RuleTable {
public:
    /// Sorts rules by category precedence (stable within a category) and
    /// validates them; throws InvalidValue on a broken table.
    explicit RuleTable(std::vector<SignatureRule> rules);

    const std::vector<SignatureRule>& rules() const { return rules_; }

private:
    std::vector<SignatureRule> rules_;
};

RuleTable default_rule_table();

/// Process-wide instance of the default table, built on first use.
const RuleTable& builtin_rule_table();

/// Rule files are JSON: {"rules": [{"category": "SqlInjection", "subtype": "Union",
/// "mitre": "T1190", "severity": "HIGH", "base_risk": 80, "reinforces": false,
/// "patterns": [{"regex": "...", "targets": ["request", "message"],
/// "method": "POST", "statuses": [401, 403]}]}]}
RuleTable rule_table_from_json(std::string_view json_text);
std::string rule_table_to_json(const RuleTable& table);
RuleTable load_rule_table(const std::string& path);

/// Fixed per-category remediation text.
std::string_view recommendation_for(ThreatCategory c);

/// base_risk + 5 per extra indicator, clamped to the rule severity's band.
int score_risk(const SignatureRule& rule, int matched_indicators);

/// First rule in priority order with a matching pattern wins; no match yields
/// a Benign verdict (LOW, risk 0, no MITRE id).
ThreatAnalysis classify_entry(const LogEntry& entry, const RuleTable& rules);

}  // namespace opensoc
