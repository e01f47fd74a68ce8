#include "opensoc/signatures.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace opensoc {

namespace {

using json = nlohmann::json;

constexpr const char* kSep = R"((?:\s|\+|%20)*)";  // optional blanks, raw or encoded

SignaturePattern request_pattern(const std::string& expr) {
    return SignaturePattern(expr, kTargetRequest | kTargetMessage);
}

SignaturePattern message_pattern(const std::string& expr) {
    return SignaturePattern(expr, kTargetMessage);
}

std::string sanitize(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out += (static_cast<unsigned char>(c) < 0x20 || c == 0x7f) ? ' ' : c;
    return std::string(trim(out));
}

struct View {
    unsigned target;
    std::string_view text;
};

std::string describe_hit(const LogEntry& e, unsigned target, std::string_view match,
                         std::size_t offset) {
    const std::string m = sanitize(match);
    if (e.format == LogFormat::Unstructured) return m + " pattern in log line";
    switch (target) {
        case kTargetRequest: {
            const std::size_t path_len = e.path ? e.path->size() : 0;
            if (e.query && offset > path_len)
                return m + " pattern in " + e.method.value_or("request") + " parameter";
            return m + " pattern in request path";
        }
        case kTargetUserAgent: return "user-agent '" + m + "'";
        case kTargetReferrer: return m + " pattern in referrer";
        default: return m + " in log message";
    }
}

std::vector<View> views_for(const LogEntry& e, const std::string& request) {
    std::vector<View> v;
    switch (e.format) {
        case LogFormat::AccessCombined:
            v.push_back({kTargetRequest, request});
            if (e.user_agent) v.push_back({kTargetUserAgent, *e.user_agent});
            if (e.referrer) v.push_back({kTargetReferrer, *e.referrer});
            break;
        case LogFormat::AuthEvent:
            if (e.message) v.push_back({kTargetMessage, *e.message});
            break;
        case LogFormat::Unstructured:
            v.push_back({kTargetAll, e.message ? std::string_view(*e.message)
                                               : std::string_view(e.raw)});
            break;
    }
    return v;
}

// Evidence for one pattern, or nullopt if it does not fire.
std::optional<std::string> evaluate(const SignaturePattern& p, const LogEntry& e,
                                    const std::vector<View>& views) {
    const bool constrained = p.method.has_value() || !p.statuses.empty();
    if (constrained) {
        if (e.format != LogFormat::AccessCombined) return std::nullopt;
        if (p.method && e.method != p.method) return std::nullopt;
        if (!p.statuses.empty() &&
            std::find(p.statuses.begin(), p.statuses.end(), e.status.value_or(0)) ==
                p.statuses.end())
            return std::nullopt;
    }
    for (const auto& view : views) {
        if ((view.target & p.targets) == 0) continue;
        std::match_results<std::string_view::const_iterator> m;
        if (!std::regex_search(view.text.begin(), view.text.end(), m, p.compiled())) continue;
        const std::string_view hit(m[0].first, m[0].second);
        if (sanitize(hit).empty()) continue;
        if (constrained) {
            return e.method.value_or("") + " to " + e.path.value_or("") + " returned " +
                   std::to_string(e.status.value_or(0));
        }
        const unsigned target = view.target == kTargetAll ? kTargetMessage : view.target;
        return describe_hit(e, target, hit, static_cast<std::size_t>(m.position(0)));
    }
    return std::nullopt;
}

void add_unique(std::vector<std::string>& list, std::string item) {
    if (std::find(list.begin(), list.end(), item) == list.end()) list.push_back(std::move(item));
}

const std::array<std::pair<std::string_view, unsigned>, 4> kTargetNames = {{
    {"request", kTargetRequest},
    {"user_agent", kTargetUserAgent},
    {"referrer", kTargetReferrer},
    {"message", kTargetMessage},
}};

}  // namespace

SignaturePattern::SignaturePattern(std::string expr, unsigned target_mask)
    : expression(std::move(expr)), targets(target_mask) {
    try {
        regex_ = std::make_shared<const std::regex>(
            expression, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
    } catch (const std::regex_error& err) {
        throw InvalidValue("invalid signature pattern '" + expression + "': " + err.what());
    }
}

const std::regex& SignaturePattern::compiled() const {
    if (!regex_) throw InvalidValue("signature pattern was never compiled");
    return *regex_;
}

int category_priority(ThreatCategory c) {
    switch (c) {
        case ThreatCategory::Log4jJndi: return 0;
        case ThreatCategory::CommandInjection: return 1;
        case ThreatCategory::SqlInjection: return 2;
        case ThreatCategory::RemoteFileInclusion: return 3;
        case ThreatCategory::PathTraversal: return 4;
        case ThreatCategory::Xss: return 5;
        case ThreatCategory::BruteForce: return 6;
        case ThreatCategory::Scanner: return 7;
        case ThreatCategory::SuspiciousAuth: return 8;
        case ThreatCategory::OtherMixed: return 9;
        case ThreatCategory::Benign: return 10;
    }
    return 10;
}

RuleTable::RuleTable(std::vector<SignatureRule> rules) : rules_(std::move(rules)) {
    std::stable_sort(rules_.begin(), rules_.end(), [](const auto& a, const auto& b) {
        return category_priority(a.category) < category_priority(b.category);
    });
    for (const auto& r : rules_) {
        const std::string who(enum_name(r.category));
        if (r.category == ThreatCategory::Benign)
            throw InvalidValue("Benign is the absence of a match and cannot have a rule");
        if (r.patterns.empty()) throw InvalidValue("rule for " + who + " has no patterns");
        if (!severity_band(r.severity).contains(r.base_risk))
            throw InvalidValue("rule for " + who + " has base_risk " +
                               std::to_string(r.base_risk) + " outside its severity band");
        if (!r.mitre) throw InvalidValue("rule for " + who + " has no MITRE id");
        if (r.subtype && !is_single_line_text(*r.subtype))
            throw InvalidValue("rule for " + who + " has an invalid subtype");
    }
}

std::string_view recommendation_for(ThreatCategory c) {
    switch (c) {
        case ThreatCategory::BruteForce:
            return "Enforce account lockout and MFA; rate-limit or block the source IP";
        case ThreatCategory::SqlInjection:
            return "Implement parameterized queries; block scanner UAs at WAF";
        case ThreatCategory::PathTraversal:
            return "Canonicalize file paths and confine reads to the web root; block traversal sequences at WAF";
        case ThreatCategory::Xss:
            return "Encode output and validate input; enforce a Content-Security-Policy";
        case ThreatCategory::CommandInjection:
            return "Never pass request input to a shell; isolate the host and patch the endpoint";
        case ThreatCategory::Scanner:
            return "Block the scanning source at the firewall; review exposed endpoints";
        case ThreatCategory::Log4jJndi:
            return "Upgrade Log4j to 2.17.1 or later; block outbound LDAP/RMI from app servers";
        case ThreatCategory::RemoteFileInclusion:
            return "Disable remote includes (allow_url_include=Off); allow-list includable files";
        case ThreatCategory::SuspiciousAuth:
            return "Confirm the login with the account owner; disable direct root login";
        case ThreatCategory::OtherMixed:
            return "Escalate for manual analyst review";
        case ThreatCategory::Benign:
            return "No action required";
    }
    return "No action required";
}

int score_risk(const SignatureRule& rule, int matched_indicators) {
    if (matched_indicators < 1) throw InvalidValue("score_risk needs at least one indicator");
    const long raw = static_cast<long>(rule.base_risk) + 5L * (matched_indicators - 1);
    return severity_band(rule.severity).clamp(static_cast<int>(std::min(raw, 1000L)));
}

RuleTable default_rule_table() {
    const std::string s = kSep;
    std::vector<SignatureRule> rules;

    rules.push_back({ThreatCategory::Log4jJndi, std::nullopt,
                     {SignaturePattern(R"(\$\{jndi:[^}\s"]*\}?)", kTargetAll),
                      SignaturePattern(R"(%24%7bjndi(:|%3a))", kTargetAll),
                      SignaturePattern(R"(\$\{\$\{(lower|upper|::-)[^}]*\})", kTargetAll)},
                     MitreTechniqueId(1190), Severity::Critical, 95, false});

    rules.push_back({ThreatCategory::CommandInjection, std::nullopt,
                     {request_pattern(R"((;|\||&&|%3b|%7c|%26%26))" + s +
                                      R"((cat|wget|curl|whoami|uname|bash|nc|rm)\b)"),
                      request_pattern(R"((\$\(|%24%28))" + s + R"([a-z]+)"),
                      request_pattern("(`|%60)" + s + R"((cat|wget|curl|whoami|uname|id|ls)\b)"),
                      request_pattern(R"((;|\||%3b|%7c))" + s + R"(/etc/passwd)")},
                     MitreTechniqueId(1190), Severity::Critical, 92, false});

    rules.push_back({ThreatCategory::SqlInjection, std::string("Time-Based"),
                     {request_pattern(R"(\b(sleep|pg_sleep|benchmark)(\s|%20)*\((\s|%20)*\d+)"),
                      request_pattern("waitfor" + s + R"((\s|\+|%20)delay)")},
                     MitreTechniqueId(1190), Severity::High, 82, false});

    rules.push_back(
        {ThreatCategory::SqlInjection, std::string("Union"),
         {request_pattern(R"(union(\s|\+|%20|/\*\*/)+(all(\s|\+|%20)+)?select)"),
          request_pattern(R"(\bor(\s|\+|%20)+['"]?\d+['"]?(\s|%20)*=(\s|%20)*['"]?\d+['"]?((\s|%20)*(--|#|%23))?)"),
          request_pattern(R"('(\s|%20)*(--|#|%23))"),
          request_pattern(R"(%27)"),
          request_pattern(R"(\b(information_schema|xp_cmdshell)\b)")},
         MitreTechniqueId(1190), Severity::High, 80, false});

    rules.push_back(
        {ThreatCategory::RemoteFileInclusion, std::nullopt,
         {request_pattern(
             R"(\b(include|inc|file|page|path|template|doc|document|load|src)=(https?|ftp)(://|%3a%2f%2f))")},
         MitreTechniqueId(1190), Severity::High, 78, false});

    rules.push_back({ThreatCategory::PathTraversal, std::nullopt,
                     {request_pattern(R"(\.\./)"), request_pattern(R"(\.\.\\)"),
                      request_pattern(R"((%2e%2e|\.\.)(%2f|%5c))"),
                      request_pattern(R"(%2e%2e/)"),
                      request_pattern(R"(%252e%252e%252f)"),
                      request_pattern(R"((/etc/(passwd|shadow)|win\.ini|boot\.ini))")},
                     MitreTechniqueId(1190), Severity::High, 75, false});

    rules.push_back({ThreatCategory::Xss, std::nullopt,
                     {request_pattern(R"(<script)"), request_pattern(R"(%3cscript)"),
                      request_pattern(R"(\bon(error|load|mouseover|focus)(\s|%20)*(=|%3d))"),
                      request_pattern(R"(javascript(:|%3a))"),
                      request_pattern(R"((<|%3c)(svg|iframe)\b)"),
                      request_pattern(R"(document\.cookie)")},
                     MitreTechniqueId(1190), Severity::Medium, 55, false});

    SignaturePattern login_post(R"((login|signin|sign-in|logon|wp-login\.php|/auth\b))",
                                kTargetRequest);
    login_post.method = "POST";
    login_post.statuses = {401, 403};
    rules.push_back({ThreatCategory::BruteForce, std::nullopt,
                     {message_pattern(R"(Failed (password|publickey) for)"),
                      message_pattern(R"(Invalid user \S+)"),
                      message_pattern(R"(authentication failure)"),
                      message_pattern(R"(maximum authentication attempts exceeded)"),
                      message_pattern(R"(FAILED LOGIN)"), login_post},
                     MitreTechniqueId(1110), Severity::Medium, 50, false});

    rules.push_back(
        {ThreatCategory::Scanner, std::nullopt,
         {SignaturePattern(
             R"(\b(nikto|sqlmap|nmap|masscan|dirbuster|gobuster|burpsuite|zgrab|wpscan|nuclei|acunetix)\b)",
             kTargetUserAgent | kTargetMessage)},
         MitreTechniqueId(1595), Severity::Medium, 45, true});

    rules.push_back(
        {ThreatCategory::SuspiciousAuth, std::nullopt,
         {message_pattern(R"(Accepted (password|publickey|keyboard-interactive(/pam)?) for root\b)"),
          message_pattern(R"(\b(off-hours|outside business hours|after-hours)\b)"),
          message_pattern(R"(ROOT LOGIN)")},
         MitreTechniqueId(1078), Severity::Medium, 60, false});

    return RuleTable(std::move(rules));
}

const RuleTable& builtin_rule_table() {
    static const RuleTable table = default_rule_table();
    return table;
}

ThreatAnalysis classify_entry(const LogEntry& entry, const RuleTable& rules) {
    const std::string request = entry.request_target();
    const auto views = views_for(entry, request);

    const SignatureRule* winner = nullptr;
    std::vector<std::string> evidence;
    std::vector<std::string> reinforcement;
    for (const auto& rule : rules.rules()) {
        if (winner && !rule.reinforces) continue;
        std::vector<std::string> hits;
        for (const auto& p : rule.patterns)
            if (auto ev = evaluate(p, entry, views)) add_unique(hits, std::move(*ev));
        if (hits.empty()) continue;
        if (!winner) {
            winner = &rule;
            evidence = std::move(hits);
        } else {
            for (auto& h : hits) add_unique(reinforcement, std::move(h));
        }
    }

    ThreatAnalysis a;
    if (!winner) {
        a.threat = {ThreatCategory::Benign, std::nullopt};
        a.severity = Severity::Low;
        a.risk_score = 0;
        a.evidence = "No indicators of compromise matched";
        a.recommendation = std::string(recommendation_for(ThreatCategory::Benign));
        return a;
    }
    for (auto& r : reinforcement) add_unique(evidence, std::move(r));

    a.threat = {winner->category, winner->subtype};
    a.mitre = winner->mitre;
    a.severity = winner->severity;
    a.risk_score = score_risk(*winner, static_cast<int>(evidence.size()));
    std::string joined;
    for (const auto& ev : evidence) {
        if (!joined.empty()) joined += "; ";
        joined += ev;
    }
    a.evidence = std::move(joined);
    a.recommendation = std::string(recommendation_for(winner->category));
    return a;
}

RuleTable rule_table_from_json(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw InvalidValue(std::string("rule file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("rules") || !doc["rules"].is_array())
        throw InvalidValue("rule file must be an object with a \"rules\" array");

    std::vector<SignatureRule> rules;
    std::size_t index = 0;
    for (const auto& jr : doc["rules"]) {
        const std::string where = "rule " + std::to_string(index++) + ": ";
        try {
            SignatureRule r;
            auto cat = category_from_enum_name(jr.at("category").get<std::string>());
            if (!cat) throw InvalidValue(where + "unknown category");
            r.category = *cat;
            if (jr.contains("subtype") && !jr["subtype"].is_null())
                r.subtype = jr["subtype"].get<std::string>();
            r.mitre = MitreTechniqueId::parse(jr.at("mitre").get<std::string>());
            r.severity = parse_severity(jr.at("severity").get<std::string>());
            r.base_risk = jr.at("base_risk").get<int>();
            r.reinforces = jr.value("reinforces", false);
            for (const auto& jp : jr.at("patterns")) {
                unsigned mask = 0;
                for (const auto& t : jp.at("targets")) {
                    const auto name = t.get<std::string>();
                    auto it = std::find_if(kTargetNames.begin(), kTargetNames.end(),
                                           [&](const auto& kv) { return kv.first == name; });
                    if (it == kTargetNames.end())
                        throw InvalidValue(where + "unknown pattern target '" + name + "'");
                    mask |= it->second;
                }
                SignaturePattern p(jp.at("regex").get<std::string>(), mask);
                if (jp.contains("method")) p.method = jp["method"].get<std::string>();
                if (jp.contains("statuses")) p.statuses = jp["statuses"].get<std::vector<int>>();
                r.patterns.push_back(std::move(p));
            }
            rules.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw InvalidValue(where + e.what());
        }
    }
    return RuleTable(std::move(rules));
}

std::string rule_table_to_json(const RuleTable& table) {
    json out = json::object();
    out["rules"] = json::array();
    for (const auto& r : table.rules()) {
        json jr;
        jr["category"] = enum_name(r.category);
        jr["subtype"] = r.subtype ? json(*r.subtype) : json(nullptr);
        jr["mitre"] = r.mitre->render();
        jr["severity"] = to_string(r.severity);
        jr["base_risk"] = r.base_risk;
        jr["reinforces"] = r.reinforces;
        jr["patterns"] = json::array();
        for (const auto& p : r.patterns) {
            json jp;
            jp["regex"] = p.expression;
            jp["targets"] = json::array();
            for (const auto& [name, bit] : kTargetNames)
                if (p.targets & bit) jp["targets"].push_back(name);
            if (p.method) jp["method"] = *p.method;
            if (!p.statuses.empty()) jp["statuses"] = p.statuses;
            jr["patterns"].push_back(std::move(jp));
        }
        out["rules"].push_back(std::move(jr));
    }
    return out.dump(2);
}

RuleTable load_rule_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidValue("cannot open rule file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return rule_table_from_json(ss.str());
}

}  // namespace opensoc
