#include "opensoc/core.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>
#include <unordered_map>
#include <vector>

namespace opensoc {

namespace {

struct CategoryInfo {
    std::string_view display;
    std::string_view short_code;
    std::string_view enum_id;
};

constexpr std::array<CategoryInfo, kCategoryCount> kCategoryInfo = {{
    {"Brute Force / Credential Stuffing", "BF", "BruteForce"},
    {"SQL Injection", "SQLi", "SqlInjection"},
    {"Path / Directory Traversal", "PT", "PathTraversal"},
    {"Cross-Site Scripting (XSS)", "XSS", "Xss"},
    {"Command Injection", "CI", "CommandInjection"},
    {"Scanner / Reconnaissance", "Scan", "Scanner"},
    {"Log4j / JNDI Injection", "Log4j", "Log4jJndi"},
    {"Remote File Inclusion", "RFI", "RemoteFileInclusion"},
    {"Suspicious Auth Events", "Auth", "SuspiciousAuth"},
    {"Other / Mixed", "Other", "OtherMixed"},
    {"Benign", "Benign", "Benign"},
}};

// UTF-8 dash code points that fold to '-'.
constexpr std::array<std::string_view, 6> kUnicodeDashes = {
    "\xE2\x80\x94",  // em dash
    "\xE2\x80\x93",  // en dash
    "\xE2\x80\x90",  // hyphen
    "\xE2\x80\x91",  // non-breaking hyphen
    "\xE2\x80\x92",  // figure dash
    "\xE2\x88\x92",  // minus sign
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

const std::unordered_map<std::string, ThreatCategory>& alias_table() {
    static const auto table = [] {
        std::unordered_map<std::string, ThreatCategory> t;
        auto add = [&t](ThreatCategory c, std::initializer_list<std::string_view> names) {
            for (auto n : names) t.emplace(normalize_label_text(n), c);
        };
        for (auto c : kAllCategories) add(c, {display_name(c), enum_name(c)});
        add(ThreatCategory::BruteForce,
            {"brute force", "brute-force", "bruteforce", "credential stuffing",
             "brute force attack", "password spraying"});
        add(ThreatCategory::SqlInjection, {"sqli", "sql injection attack", "sql-injection"});
        add(ThreatCategory::PathTraversal,
            {"path traversal", "directory traversal", "path traversal attack"});
        add(ThreatCategory::Xss, {"xss", "cross-site scripting", "cross site scripting"});
        add(ThreatCategory::CommandInjection,
            {"os command injection", "cmd injection", "shell injection"});
        add(ThreatCategory::Scanner,
            {"scanner", "reconnaissance", "recon", "scanning", "vulnerability scan",
             "vulnerability scanner"});
        add(ThreatCategory::Log4jJndi,
            {"log4j", "log4shell", "jndi injection", "log4j jndi injection"});
        add(ThreatCategory::RemoteFileInclusion, {"rfi"});
        add(ThreatCategory::SuspiciousAuth,
            {"suspicious auth", "suspicious auth event", "suspicious authentication",
             "suspicious login"});
        add(ThreatCategory::OtherMixed, {"other", "mixed"});
        add(ThreatCategory::Benign, {"none", "no threat", "normal"});
        return t;
    }();
    return table;
}

std::optional<ThreatCategory> lookup_alias(std::string_view text) {
    const auto& table = alias_table();
    auto it = table.find(normalize_label_text(text));
    if (it == table.end()) return std::nullopt;
    return it->second;
}

// Earliest subtype separator: em/en dash anywhere, "--" anywhere, or a
// single '-' surrounded by whitespace. Returns {pos, length}.
std::optional<std::pair<std::size_t, std::size_t>> find_separator(std::string_view t) {
    std::optional<std::pair<std::size_t, std::size_t>> best;
    auto consider = [&best](std::size_t pos, std::size_t len) {
        if (pos != std::string_view::npos && (!best || pos < best->first)) best = {pos, len};
    };
    consider(t.find("\xE2\x80\x94"), 3);
    consider(t.find("\xE2\x80\x93"), 3);
    consider(t.find("--"), 2);
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
        if (t[i] == '-' && is_space(t[i - 1]) && is_space(t[i + 1])) {
            consider(i, 1);
            break;
        }
    }
    return best;
}

std::string_view strip_leading_separators(std::string_view s) {
    for (;;) {
        s = trim(s);
        if (s.empty()) return s;
        if (s.front() == '-' || s.front() == ':') {
            s.remove_prefix(1);
            continue;
        }
        bool stripped = false;
        for (auto d : kUnicodeDashes) {
            if (s.starts_with(d)) {
                s.remove_prefix(d.size());
                stripped = true;
                break;
            }
        }
        if (!stripped) return s;
    }
}

std::optional<std::string> as_subtype(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    return std::string(s);
}

}  // namespace

std::string_view display_name(ThreatCategory c) { return kCategoryInfo[index_of(c)].display; }
std::string_view short_name(ThreatCategory c) { return kCategoryInfo[index_of(c)].short_code; }
std::string_view enum_name(ThreatCategory c) { return kCategoryInfo[index_of(c)].enum_id; }

std::optional<ThreatCategory> category_from_enum_name(std::string_view name) {
    for (auto c : kAllCategories)
        if (enum_name(c) == name) return c;
    return std::nullopt;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

std::string normalize_label_text(std::string_view text) {
    // Fold unicode dashes to '-'.
    std::string folded;
    folded.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        bool matched = false;
        for (auto d : kUnicodeDashes) {
            if (text.substr(i).starts_with(d)) {
                folded.push_back('-');
                i += d.size();
                matched = true;
                break;
            }
        }
        if (!matched) folded.push_back(text[i++]);
    }
    folded = to_lower(folded);

    // Collapse dash runs and whitespace, dropping whitespace next to '-' or '/'.
    std::string out;
    out.reserve(folded.size());
    bool pending_space = false;
    for (char ch : folded) {
        if (is_space(ch)) {
            pending_space = true;
            continue;
        }
        const bool joiner = ch == '-' || ch == '/';
        if (pending_space && !out.empty() && !joiner && out.back() != '-' && out.back() != '/')
            out.push_back(' ');
        pending_space = false;
        if (ch == '-' && !out.empty() && out.back() == '-') continue;
        out.push_back(ch);
    }
    return out;
}

std::string ThreatLabel::render() const {
    std::string out(display_name(category));
    if (subtype) {
        out += " \xE2\x80\x94 ";
        out += *subtype;
    }
    return out;
}

ThreatLabel ThreatLabel::parse(std::string_view text) {
    const std::string_view t = trim(text);

    if (auto sep = find_separator(t)) {
        if (auto cat = lookup_alias(t.substr(0, sep->first)))
            return {*cat, as_subtype(t.substr(sep->first + sep->second))};
    }

    // Longest leading run of words naming a category; the rest is the subtype.
    std::vector<std::size_t> word_ends;
    for (std::size_t i = 0; i < t.size();) {
        while (i < t.size() && is_space(t[i])) ++i;
        if (i >= t.size()) break;
        while (i < t.size() && !is_space(t[i])) ++i;
        word_ends.push_back(i);
    }
    for (auto it = word_ends.rbegin(); it != word_ends.rend(); ++it) {
        if (auto cat = lookup_alias(t.substr(0, *it)))
            return {*cat, as_subtype(strip_leading_separators(t.substr(*it)))};
    }

    return {ThreatCategory::OtherMixed, as_subtype(t)};
}

bool ThreatLabel::equivalent(const ThreatLabel& other) const {
    if (category != other.category) return false;
    if (subtype.has_value() != other.subtype.has_value()) return false;
    return !subtype || normalize_label_text(*subtype) == normalize_label_text(*other.subtype);
}

MitreTechniqueId::MitreTechniqueId(int base_id, std::optional<int> sub_id)
    : base(base_id), sub(sub_id) {
    if (base < 1000 || base > 9999)
        throw InvalidValue("MITRE technique number out of range: " + std::to_string(base));
    if (sub && (*sub < 0 || *sub > 999))
        throw InvalidValue("MITRE sub-technique out of range: " + std::to_string(*sub));
}

std::string MitreTechniqueId::render() const {
    char buf[16];
    if (sub)
        std::snprintf(buf, sizeof buf, "T%04d.%03d", base, *sub);
    else
        std::snprintf(buf, sizeof buf, "T%04d", base);
    return buf;
}

MitreTechniqueId MitreTechniqueId::parse(std::string_view text) {
    auto digits = [](std::string_view s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
            return std::isdigit(static_cast<unsigned char>(c)) != 0;
        });
    };
    const bool shape_ok =
        (text.size() == 5 || (text.size() == 9 && text[5] == '.')) && text[0] == 'T' &&
        digits(text.substr(1, 4)) && (text.size() == 5 || digits(text.substr(6)));
    if (!shape_ok) throw InvalidValue("not a canonical MITRE technique id: " + std::string(text));
    const int base = std::stoi(std::string(text.substr(1, 4)));
    std::optional<int> sub;
    if (text.size() == 9) sub = std::stoi(std::string(text.substr(6)));
    return MitreTechniqueId(base, sub);
}

std::string_view to_string(Severity s) {
    switch (s) {
        case Severity::Low: return "LOW";
        case Severity::Medium: return "MEDIUM";
        case Severity::High: return "HIGH";
        case Severity::Critical: return "CRITICAL";
    }
    return "LOW";
}

std::optional<Severity> try_parse_severity(std::string_view text) {
    text = trim(text);
    for (auto s : kAllSeverities)
        if (iequals(text, to_string(s))) return s;
    return std::nullopt;
}

Severity parse_severity(std::string_view text) {
    if (auto s = try_parse_severity(text)) return *s;
    throw InvalidValue("unknown severity: " + std::string(text));
}

RiskBand severity_band(Severity s) {
    switch (s) {
        case Severity::Low: return {0, 39};
        case Severity::Medium: return {40, 69};
        case Severity::High: return {70, 89};
        case Severity::Critical: return {90, 100};
    }
    return {0, 39};
}

bool is_single_line_text(std::string_view text) {
    return !text.empty() && trim(text).size() == text.size() &&
           text.find_first_of("\r\n") == std::string_view::npos;
}

void ThreatAnalysis::validate() const {
    if (threat.subtype && !is_single_line_text(*threat.subtype))
        throw InvalidValue("threat subtype must be non-empty single-line text");
    if (!mitre && threat.category != ThreatCategory::Benign)
        throw InvalidValue("MITRE id is required for non-benign verdicts");
    if (risk_score < 0 || risk_score > 100)
        throw InvalidValue("risk score outside [0,100]: " + std::to_string(risk_score));
    if (!is_single_line_text(evidence))
        throw InvalidValue("evidence must be non-empty single-line text");
    if (!is_single_line_text(recommendation))
        throw InvalidValue("recommendation must be non-empty single-line text");
}

std::string format_utc(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace opensoc
