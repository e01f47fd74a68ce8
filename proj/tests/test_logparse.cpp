#include <doctest.h>

#include "opensoc/logparse.hpp"

using namespace opensoc;

namespace {
const std::string kCaseLine =
    R"(91.108.4.20 - - [16/Mar/2025:01:05:33] "GET /profile?id=1 OR 1=1-- HTTP/1.1" 403 12466 "-" "burpsuite")";
}

TEST_CASE("combined access line with raw spaces in the target") {
    const auto e = parse_line(kCaseLine);
    CHECK(e.format == LogFormat::AccessCombined);
    CHECK(e.source_ip == "91.108.4.20");
    CHECK(e.method == "GET");
    CHECK(e.path == "/profile");
    CHECK(e.query == "id=1 OR 1=1--");
    CHECK(e.protocol == "HTTP/1.1");
    CHECK(e.status == 403);
    CHECK(e.bytes == 12466u);
    CHECK(e.user_agent == "burpsuite");
    CHECK_FALSE(e.referrer.has_value());
    CHECK(e.request_target() == "/profile?id=1 OR 1=1--");
    REQUIRE(e.timestamp);
    using namespace std::chrono;
    CHECK(*e.timestamp == sys_days{year{2025} / March / 16} + hours{1} + minutes{5} + seconds{33});
}

TEST_CASE("minimal access line with timezone and dash placeholders") {
    const auto e = parse_line(R"(127.0.0.1 - - [01/Jan/2025:00:00:00 +0000] "GET / HTTP/1.1" 200 0 "-" "-")");
    CHECK(e.format == LogFormat::AccessCombined);
    CHECK(e.path == "/");
    CHECK_FALSE(e.query.has_value());
    CHECK_FALSE(e.referrer.has_value());
    CHECK_FALSE(e.user_agent.has_value());
    CHECK(e.status == 200);
    CHECK(e.bytes == 0u);
}

TEST_CASE("timezone offsets are applied") {
    const auto a = parse_line(R"(10.0.0.1 - - [01/Jan/2025:02:00:00 +0200] "GET / HTTP/1.1" 200 1 "-" "x")");
    const auto b = parse_line(R"(10.0.0.1 - - [01/Jan/2025:00:00:00 +0000] "GET / HTTP/1.1" 200 1 "-" "x")");
    REQUIRE(a.timestamp);
    CHECK(a.timestamp == b.timestamp);
}

TEST_CASE("auth event lines") {
    const auto e = parse_line("Mar 16 01:05:33 web01 sshd[2211]: Failed password for admin from 203.0.113.9 port 51234 ssh2");
    CHECK(e.format == LogFormat::AuthEvent);
    CHECK(e.source_ip == "203.0.113.9");
    REQUIRE(e.message);
    CHECK(e.message->find("Failed password for admin") != std::string::npos);
}

TEST_CASE("fallback and errors") {
    const auto e = parse_line("this is not a log line");
    CHECK(e.format == LogFormat::Unstructured);
    CHECK(e.message == "this is not a log line");
    CHECK_THROWS_AS(parse_line(""), EmptyLine);
    CHECK_THROWS_AS(parse_line("   \t"), EmptyLine);
}

TEST_CASE("stream parsing") {
    SUBCASE("blank lines are skipped") {
        std::vector<std::string> lines = {"first line", "", "third line"};
        auto s = parse_stream(lines);
        CHECK(s.entries.size() == 2);
        CHECK(s.skipped == 1);
        CHECK(s.entries[1].raw == "third line");
    }
    SUBCASE("repeated line is deterministic") {
        std::vector<std::string> lines(10, kCaseLine);
        auto s = parse_stream(lines);
        REQUIRE(s.entries.size() == 10);
        for (const auto& e : s.entries) {
            CHECK(e.format == LogFormat::AccessCombined);
            CHECK(e == s.entries[0]);
        }
    }
    SUBCASE("csv with log header") {
        auto s = parse_text("LOG\nfirst entry\n\"second, with comma\"\n", InputFormat::Csv);
        REQUIRE(s.entries.size() == 2);
        CHECK(s.entries[1].raw == "second, with comma");
        CHECK_FALSE(s.diagnostics.empty());
    }
    SUBCASE("csv without header keeps the first row") {
        auto s = parse_text("a\nb\n", InputFormat::Csv);
        CHECK(s.entries.size() == 2);
    }
    SUBCASE("lines with CRLF") {
        auto s = parse_text("one\r\ntwo\r\n\r\n", InputFormat::Lines);
        REQUIRE(s.entries.size() == 2);
        CHECK(s.entries[0].raw == "one");
        CHECK(s.skipped == 1);
    }
}

TEST_CASE("input format by extension") {
    CHECK(input_format_for("a.log") == InputFormat::Lines);
    CHECK(input_format_for("a.TXT") == InputFormat::Lines);
    CHECK(input_format_for("a.csv") == InputFormat::Csv);
    CHECK_FALSE(input_format_for("a.exe").has_value());
    CHECK_FALSE(input_format_for("log").has_value());
}

TEST_CASE("csv reader and escaping") {
    auto rows = read_csv("a,\"b,c\",\"d \"\"q\"\"\"\n\"multi\nline\",x\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"a", "b,c", "d \"q\""});
    CHECK(rows[1][0] == "multi\nline");
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(read_csv(csv_escape("x,\"y\"\nz"))[0][0] == "x,\"y\"\nz");
}
