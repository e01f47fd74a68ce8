#include "opensoc/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

namespace opensoc {

namespace {

enum Field { kThreat, kMitre, kSeverity, kRisk, kEvidence, kRecommendation, kNoField };

Field field_for_key(std::string_view key) {
    std::string k;
    for (char c : key) {
        if (c == '*' || c == '`' || c == '_') {
            if (c == '_') k += ' ';
            continue;
        }
        k += (c == '-') ? ' ' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    k = normalize_label_text(k);
    if (k == "threat type") return kThreat;
    if (k == "mitre id") return kMitre;
    if (k == "severity") return kSeverity;
    if (k == "risk score") return kRisk;
    if (k == "evidence") return kEvidence;
    if (k == "recommendation") return kRecommendation;
    return kNoField;
}

// Drops list bullets, blockquote markers, headings and "1." numbering.
std::string_view strip_line_decoration(std::string_view line) {
    for (;;) {
        line = trim(line);
        if (line.empty()) return line;
        const char c = line.front();
        if (c == '#' || c == '>' || ((c == '-' || c == '+') && line.size() > 1 &&
                                     std::isspace(static_cast<unsigned char>(line[1])))) {
            line.remove_prefix(1);
            continue;
        }
        if (line.starts_with("\xE2\x80\xA2")) {  // bullet
            line.remove_prefix(3);
            continue;
        }
        std::size_t d = 0;
        while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
        if (d > 0 && d + 1 < line.size() && (line[d] == '.' || line[d] == ')') &&
            std::isspace(static_cast<unsigned char>(line[d + 1]))) {
            line.remove_prefix(d + 1);
            continue;
        }
        return line;
    }
}

std::optional<Severity> parse_severity_value(std::string_view v) {
    std::size_t n = 0;
    while (n < v.size() && std::isalpha(static_cast<unsigned char>(v[n]))) ++n;
    return try_parse_severity(v.substr(0, n));
}

std::optional<int> parse_risk_value(std::string_view v, std::vector<std::string>& diags) {
    static const std::regex re(R"(^(-?\d{1,9})(\s*/\s*100\b)?)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_search(v.begin(), v.end(), m, re)) return std::nullopt;
    const long value = std::stol(m[1].str());
    const long clamped = std::clamp(value, 0L, 100L);
    if (clamped != value)
        diags.push_back("risk score " + std::to_string(value) + " clamped to " +
                        std::to_string(clamped));
    return static_cast<int>(clamped);
}

bool is_not_applicable(std::string_view v) {
    static constexpr std::array<std::string_view, 6> kNa = {"n/a", "na", "none", "-", "null",
                                                            "not applicable"};
    return std::any_of(kNa.begin(), kNa.end(), [&](auto s) { return iequals(v, s); });
}

std::optional<MitreTechniqueId> try_make_id(const std::string& base, const std::string& sub) {
    try {
        std::optional<int> s;
        if (!sub.empty()) s = std::stoi(sub);
        return MitreTechniqueId(std::stoi(base), s);
    } catch (const InvalidValue&) {
        return std::nullopt;
    }
}

}  // namespace

int ExtractionResult::field_count() const {
    return int(threat.has_value()) + int(mitre.has_value() || mitre_not_applicable) +
           int(severity.has_value()) + int(risk_score.has_value()) +
           int(evidence.has_value()) + int(recommendation.has_value());
}

std::optional<ThreatAnalysis> ExtractionResult::to_analysis() const {
    if (field_count() != 6) return std::nullopt;
    ThreatAnalysis a{*threat, mitre, *severity, *risk_score, *evidence, *recommendation};
    try {
        a.validate();
    } catch (const InvalidValue&) {
        return std::nullopt;
    }
    return a;
}

MitreTechniqueId normalize_mitre(std::string_view raw_id) {
    static const std::array<std::regex, 3> patterns = {
        std::regex(R"((?:^|[^a-z0-9])t\s*-?\s*(\d{4})(?:\s*[./]\s*(\d{3}))?(?![0-9]))",
                   std::regex::icase),
        std::regex(R"(technique\s*(?:id\s*)?[:#]?\s*(\d{4})(?:\s*[./]\s*(\d{3}))?(?![0-9]))",
                   std::regex::icase),
        std::regex(R"((?:^|[^0-9])(\d{4})(?:\.(\d{3}))?(?![0-9]))")};
    for (const auto& re : patterns) {
        for (std::regex_iterator<std::string_view::const_iterator> it(raw_id.begin(), raw_id.end(),
                                                                      re),
             end;
             it != end; ++it) {
            if (auto id = try_make_id((*it)[1].str(), (*it)[2].str())) return *id;
        }
    }
    throw UnrecognizedIdentifier("no MITRE technique number in '" + std::string(raw_id) + "'");
}

bool mitre_match(const MitreTechniqueId& predicted, const MitreTechniqueId& truth,
                 MitreMatchMode mode) {
    if (predicted.base != truth.base) return false;
    return mode == MitreMatchMode::Base || predicted.sub == truth.sub;
}

ExtractionResult extract_fields(std::string_view raw) {
    ExtractionResult r;
    r.raw = std::string(raw);

    std::size_t start = 0;
    while (start <= raw.size()) {
        auto nl = raw.find('\n', start);
        const auto end = nl == std::string_view::npos ? raw.size() : nl;
        std::string_view line = strip_line_decoration(raw.substr(start, end - start));
        start = end + 1;

        auto colon = line.find(':');
        if (colon == std::string_view::npos || colon > 40) continue;
        const Field field = field_for_key(line.substr(0, colon));
        if (field == kNoField) continue;
        std::string_view value = trim(line.substr(colon + 1));
        if (value.starts_with("**")) value = trim(value.substr(2));
        if (value.empty()) continue;

        switch (field) {
            case kThreat:
                if (!r.threat) r.threat = ThreatLabel::parse(value);
                break;
            case kMitre:
                if (r.mitre || r.mitre_not_applicable) break;
                if (is_not_applicable(value)) {
                    r.mitre_not_applicable = true;
                } else {
                    try {
                        r.mitre = normalize_mitre(value);
                    } catch (const UnrecognizedIdentifier&) {
                        r.diagnostics.push_back("unrecognized MITRE_ID value: " +
                                                std::string(value));
                    }
                }
                break;
            case kSeverity:
                if (!r.severity) r.severity = parse_severity_value(value);
                break;
            case kRisk:
                if (!r.risk_score) r.risk_score = parse_risk_value(value, r.diagnostics);
                break;
            case kEvidence:
                if (!r.evidence) r.evidence = std::string(value);
                break;
            case kRecommendation:
                if (!r.recommendation) r.recommendation = std::string(value);
                break;
            case kNoField: break;
        }
        if (nl == std::string_view::npos) break;
    }
    return r;
}

}  // namespace opensoc
