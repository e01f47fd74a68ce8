#include <doctest.h>

#include <set>

#include "opensoc/core.hpp"

using namespace opensoc;

TEST_CASE("every category has distinct display, short and enum names") {
    std::set<std::string_view> display, shorts, enums;
    for (auto c : kAllCategories) {
        display.insert(display_name(c));
        shorts.insert(short_name(c));
        enums.insert(enum_name(c));
        CHECK(category_from_enum_name(enum_name(c)) == c);
    }
    CHECK(display.size() == kCategoryCount);
    CHECK(shorts.size() == kCategoryCount);
    CHECK(enums.size() == kCategoryCount);
    CHECK_FALSE(category_from_enum_name("NotACategory").has_value());
}

TEST_CASE("label normalization unifies case, whitespace and dashes") {
    const auto canon = normalize_label_text("SQL Injection \xE2\x80\x94 Union");
    CHECK(normalize_label_text("sql injection -- union") == canon);
    CHECK(normalize_label_text("SQL  Injection \xE2\x80\x93 UNION") == canon);
    CHECK(normalize_label_text("  SQL Injection - Union  ") == canon);
    CHECK(normalize_label_text("SQL Injection Union") != canon);
}

TEST_CASE("threat label render and parse") {
    ThreatLabel l{ThreatCategory::SqlInjection, "Union"};
    CHECK(l.render() == "SQL Injection \xE2\x80\x94 Union");
    CHECK(ThreatLabel::parse(l.render()) == l);

    SUBCASE("double hyphen separator") {
        auto p = ThreatLabel::parse("SQL Injection -- Union");
        CHECK(p.category == ThreatCategory::SqlInjection);
        REQUIRE(p.subtype);
        CHECK(*p.subtype == "Union");
        CHECK(p.equivalent(l));
    }
    SUBCASE("no subtype") {
        auto p = ThreatLabel::parse("SQL Injection");
        CHECK(p.category == ThreatCategory::SqlInjection);
        CHECK_FALSE(p.subtype);
        CHECK_FALSE(p.equivalent(l));
    }
    SUBCASE("aliases") {
        CHECK(ThreatLabel::parse("XSS").category == ThreatCategory::Xss);
        CHECK(ThreatLabel::parse("Brute Force").category == ThreatCategory::BruteForce);
        CHECK(ThreatLabel::parse("benign").category == ThreatCategory::Benign);
        CHECK(ThreatLabel::parse("Log4j / JNDI Injection").category == ThreatCategory::Log4jJndi);
    }
    SUBCASE("unknown text is kept as Other / Mixed") {
        auto p = ThreatLabel::parse("Quantum Ransomware");
        CHECK(p.category == ThreatCategory::OtherMixed);
        REQUIRE(p.subtype);
        CHECK(*p.subtype == "Quantum Ransomware");
    }
}

TEST_CASE("MITRE identifier syntax") {
    CHECK(MitreTechniqueId(1190).render() == "T1190");
    CHECK(MitreTechniqueId(1190, 1).render() == "T1190.001");
    CHECK(MitreTechniqueId::parse("T1190.001") == MitreTechniqueId(1190, 1));
    CHECK_THROWS_AS(MitreTechniqueId(999), InvalidValue);
    CHECK_THROWS_AS(MitreTechniqueId(1190, 1000), InvalidValue);
    CHECK_THROWS_AS(MitreTechniqueId::parse("t1190"), InvalidValue);
    CHECK_THROWS_AS(MitreTechniqueId::parse("T1190.1"), InvalidValue);
    CHECK_THROWS_AS(MitreTechniqueId::parse("Technique 1190"), InvalidValue);
}

TEST_CASE("severity parsing") {
    CHECK(parse_severity("HIGH") == Severity::High);
    CHECK(parse_severity("high") == Severity::High);
    CHECK(parse_severity("Critical") == Severity::Critical);
    CHECK_THROWS_AS(parse_severity("severe"), InvalidValue);
    CHECK_FALSE(try_parse_severity("").has_value());
    for (auto s : kAllSeverities) CHECK(parse_severity(to_string(s)) == s);
}

TEST_CASE("risk bands") {
    CHECK(severity_band(Severity::High) == RiskBand{70, 89});
    CHECK(severity_band(Severity::High).contains(85));
    CHECK(severity_band(Severity::Low) == RiskBand{0, 39});
    CHECK(severity_band(Severity::Medium) == RiskBand{40, 69});
    CHECK(severity_band(Severity::Critical) == RiskBand{90, 100});
    for (int v = 0; v <= 100; ++v) {
        int hits = 0;
        for (auto s : kAllSeverities) hits += severity_band(s).contains(v);
        CHECK(hits == 1);
    }
    for (auto s : kAllSeverities) {
        CHECK_FALSE(severity_band(s).contains(-1));
        CHECK_FALSE(severity_band(s).contains(101));
    }
}

TEST_CASE("analysis validation") {
    ThreatAnalysis a;
    a.threat = {ThreatCategory::SqlInjection, "Union"};
    a.mitre = MitreTechniqueId(1190);
    a.severity = Severity::High;
    a.risk_score = 85;
    a.evidence = "OR 1=1-- pattern";
    a.recommendation = "Implement parameterized queries";
    CHECK_NOTHROW(a.validate());

    auto broken = a;
    broken.risk_score = 101;
    CHECK_THROWS_AS(broken.validate(), InvalidValue);
    broken = a;
    broken.evidence = "two\nlines";
    CHECK_THROWS_AS(broken.validate(), InvalidValue);
    broken = a;
    broken.recommendation = "";
    CHECK_THROWS_AS(broken.validate(), InvalidValue);
    broken = a;
    broken.mitre.reset();
    CHECK_THROWS_AS(broken.validate(), InvalidValue);

    ThreatAnalysis benign;
    benign.threat = {ThreatCategory::Benign, std::nullopt};
    benign.evidence = "no indicators";
    benign.recommendation = "none";
    CHECK_NOTHROW(benign.validate());
}

TEST_CASE("string helpers") {
    CHECK(trim("  a b \t") == "a b");
    CHECK(to_lower("AbC") == "abc");
    CHECK(iequals("HiGh", "high"));
    CHECK(is_single_line_text("ok"));
    CHECK_FALSE(is_single_line_text(" padded"));
    CHECK_FALSE(is_single_line_text("a\rb"));
    CHECK(format_utc(std::chrono::system_clock::time_point{}) == "1970-01-01T00:00:00Z");
}
