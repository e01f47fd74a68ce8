#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "opensoc/core.hpp"

namespace opensoc {

OPENSOC_DEFINE_ERROR(EmptyLine);

enum class LogFormat : std::uint8_t { AccessCombined, AuthEvent, Unstructured };

std::string_view to_string(LogFormat f);

struct LogEntry {
    std::string raw;
    LogFormat format = LogFormat::Unstructured;
    std::optional<std::string> source_ip;
    std::optional<std::chrono::sys_seconds> timestamp;
    std::optional<std::string> method;
    std::optional<std::string> path;
    std::optional<std::string> query;  // text after the first '?', if any
    std::optional<std::string> protocol;
    std::optional<int> status;
    std::optional<std::uint64_t> bytes;
    std::optional<std::string> referrer;
    std::optional<std::string> user_agent;
    std::optional<std::string> message;

    /// "path" or "path?query", as it appeared in the request line.
    std::string request_target() const;

    friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

/// Classifies and parses one line. Combined access-log lines (timezone
/// optional, request target may contain raw spaces) become AccessCombined,
/// syslog-style authentication lines become AuthEvent, anything else is
/// Unstructured with message = line. Throws EmptyLine for blank input.
LogEntry parse_line(std::string_view line);

enum class InputFormat : std::uint8_t { Lines, Csv };

/// .log/.txt -> Lines, .csv -> Csv, anything else -> nullopt.
std::optional<InputFormat> input_format_for(std::string_view filename);

struct LineDiagnostic {
    std::size_t line_number;  // 1-based, physical line/row in the input
    std::string note;
};

struct ParsedStream {
    std::vector<LogEntry> entries;
    std::size_t skipped = 0;  // blank lines; a CSV header is reported as a diagnostic
    std::vector<LineDiagnostic> diagnostics;
};

/// One entry per non-blank line, in input order. Never throws on bad lines.
ParsedStream parse_stream(std::span<const std::string> lines);

/// Splits `text` into records per `format` and parses them. For CSV the first
/// column is the raw log line and a first row equal to "log" is a header.
ParsedStream parse_text(std::string_view text, InputFormat format);

/// RFC 4180-style reader; quoted fields may contain commas, quotes and newlines.
std::vector<std::vector<std::string>> read_csv(std::string_view text);

/// Quotes a CSV cell when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view cell);

}  // namespace opensoc
