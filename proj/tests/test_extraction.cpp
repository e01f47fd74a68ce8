#include <doctest.h>

#include "opensoc/extraction.hpp"
#include "opensoc/prompting.hpp"

using namespace opensoc;

namespace {
const std::string kBlock =
    "THREAT_TYPE: SQL Injection -- Union\n"
    "MITRE_ID: T1190\n"
    "SEVERITY: HIGH\n"
    "RISK_SCORE: 85\n"
    "EVIDENCE: OR 1=1-- pattern in GET parameter; user-agent 'burpsuite'\n"
    "RECOMMENDATION: Implement parameterized queries; block scanner UAs at WAF";
}

TEST_CASE("case-study block") {
    const auto r = extract_fields(kBlock);
    CHECK(r.field_count() == 6);
    REQUIRE(r.threat);
    CHECK(r.threat->category == ThreatCategory::SqlInjection);
    CHECK(r.threat->subtype == "Union");
    CHECK(r.mitre == MitreTechniqueId(1190));
    CHECK(r.severity == Severity::High);
    CHECK(r.risk_score == 85);
    CHECK(r.evidence == "OR 1=1-- pattern in GET parameter; user-agent 'burpsuite'");
    CHECK(r.raw == kBlock);
    auto a = r.to_analysis();
    REQUIRE(a);
    CHECK(render_output(*a).find("SQL Injection \xE2\x80\x94 Union") != std::string::npos);
}

TEST_CASE("prose yields nothing") {
    const auto r = extract_fields(
        "This log looks dangerous because the request contains a classic SQL injection payload. "
        "The severity is high and you should patch the application.");
    CHECK(r.empty());
    CHECK_FALSE(r.to_analysis());
}

TEST_CASE("partial, loosely formatted labels") {
    const auto r = extract_fields("severity: high\nRisk Score: 85/100\n");
    CHECK(r.severity == Severity::High);
    CHECK(r.risk_score == 85);
    CHECK_FALSE(r.threat);
    CHECK_FALSE(r.mitre);
    CHECK_FALSE(r.evidence);
    CHECK_FALSE(r.recommendation);
    CHECK(r.field_count() == 2);
}

TEST_CASE("markdown decoration and label spellings") {
    const auto r = extract_fields(
        "Here is my analysis:\n"
        "- **Threat Type:** Cross-Site Scripting (XSS)\n"
        "* mitre-id: technique 1059.007\n"
        "**SEVERITY**: medium\n"
        "  risk_score : 55\n");
    REQUIRE(r.threat);
    CHECK(r.threat->category == ThreatCategory::Xss);
    CHECK(r.mitre == MitreTechniqueId(1059, 7));
    CHECK(r.severity == Severity::Medium);
    CHECK(r.risk_score == 55);
}

TEST_CASE("first valid occurrence wins") {
    const auto r = extract_fields("SEVERITY: HIGH\nSEVERITY: LOW\nSEVERITY: banana\n");
    CHECK(r.severity == Severity::High);
    const auto s = extract_fields("SEVERITY: extreme\nSEVERITY: LOW\n");
    CHECK(s.severity == Severity::Low);
}

TEST_CASE("out-of-range risk is clamped and flagged") {
    const auto r = extract_fields("RISK_SCORE: 150");
    CHECK(r.risk_score == 100);
    CHECK_FALSE(r.diagnostics.empty());
    CHECK(extract_fields("RISK_SCORE: -3").risk_score == 0);
}

TEST_CASE("not-applicable MITRE id") {
    const auto r = extract_fields("MITRE_ID: N/A");
    CHECK(r.mitre_not_applicable);
    CHECK_FALSE(r.mitre);
}

TEST_CASE("unknown threat text stays as Other / Mixed") {
    const auto r = extract_fields("THREAT_TYPE: Cryptojacking");
    REQUIRE(r.threat);
    CHECK(r.threat->category == ThreatCategory::OtherMixed);
    CHECK(r.threat->subtype == "Cryptojacking");
}

TEST_CASE("totality on hostile bytes") {
    std::string junk;
    for (int i = 0; i < 256; ++i) junk += static_cast<char>(i);
    junk += "\nTHREAT_TYPE:\nMITRE_ID:\n:\n\xff\xfe";
    CHECK_NOTHROW(extract_fields(junk));
    CHECK_NOTHROW(extract_fields(""));
    CHECK_NOTHROW(extract_fields(std::string(100000, ':')));
}

TEST_CASE("MITRE normalization") {
    CHECK(normalize_mitre("T1190") == MitreTechniqueId(1190));
    CHECK(normalize_mitre("t1190") == MitreTechniqueId(1190));
    CHECK(normalize_mitre("Technique 1190") == MitreTechniqueId(1190));
    CHECK(normalize_mitre("T 1190") == MitreTechniqueId(1190));
    CHECK(normalize_mitre("MITRE T1190") == MitreTechniqueId(1190));
    CHECK(normalize_mitre("1190") == MitreTechniqueId(1190));
    CHECK(normalize_mitre("T1190.001") == MitreTechniqueId(1190, 1));
    CHECK(normalize_mitre("T1190.001").base == 1190);
    CHECK_THROWS_AS(normalize_mitre("banana"), UnrecognizedIdentifier);
    CHECK_THROWS_AS(normalize_mitre(""), UnrecognizedIdentifier);
    CHECK_THROWS_AS(normalize_mitre("T119"), UnrecognizedIdentifier);
    for (auto s : {"T1190", "T1190.001", "Technique 1190"}) {
        const auto once = normalize_mitre(s);
        CHECK(normalize_mitre(once.render()) == once);
    }
}

TEST_CASE("MITRE matching modes") {
    const MitreTechniqueId sub(1190, 1), base(1190), other(1110);
    CHECK(mitre_match(sub, base, MitreMatchMode::Base));
    CHECK_FALSE(mitre_match(sub, base, MitreMatchMode::Strict));
    CHECK_FALSE(mitre_match(other, base, MitreMatchMode::Base));
    CHECK(mitre_match(base, base, MitreMatchMode::Strict));
}
