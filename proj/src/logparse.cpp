#include "opensoc/logparse.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

namespace opensoc {

namespace {

using namespace std::chrono;

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), is_digit);
}

bool looks_like_ip(std::string_view s) {
    if (s.empty() || s.size() > 45) return false;
    bool has_sep = false;
    for (char c : s) {
        if (c == '.' || c == ':') {
            has_sep = true;
        } else if (!std::isxdigit(static_cast<unsigned char>(c))) {
            return false;
        }
    }
    return has_sep;
}

std::optional<int> month_from_abbrev(std::string_view m) {
    static constexpr std::array<std::string_view, 12> kMonths = {
        "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    for (std::size_t i = 0; i < kMonths.size(); ++i)
        if (iequals(m, kMonths[i])) return static_cast<int>(i) + 1;
    return std::nullopt;
}

std::optional<sys_seconds> make_instant(int y, int mo, int d, int h, int mi, int s,
                                        int offset_minutes) {
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                             day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) return std::nullopt;
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} - minutes{offset_minutes};
}

// "16/Mar/2025:01:05:33" with an optional " +0000" suffix.
std::optional<sys_seconds> parse_clf_time(std::string_view t) {
    static const std::regex re(
        R"(^(\d{1,2})/([A-Za-z]{3})/(\d{4}):(\d{2}):(\d{2}):(\d{2})(?:\s+([+-])(\d{2})(\d{2}))?$)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_match(t.begin(), t.end(), m, re)) return std::nullopt;
    auto month = month_from_abbrev(m[2].str());
    if (!month) return std::nullopt;
    int offset = 0;
    if (m[7].matched) {
        offset = std::stoi(m[8].str()) * 60 + std::stoi(m[9].str());
        if (m[7].str() == "-") offset = -offset;
    }
    return make_instant(std::stoi(m[3].str()), *month, std::stoi(m[1].str()),
                        std::stoi(m[4].str()), std::stoi(m[5].str()), std::stoi(m[6].str()),
                        offset);
}

std::optional<sys_seconds> parse_iso_time(std::string_view t) {
    static const std::regex re(
        R"(^(\d{4})-(\d{2})-(\d{2})[T ](\d{2}):(\d{2}):(\d{2})(?:\.\d+)?(Z|([+-])(\d{2}):?(\d{2}))?$)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_match(t.begin(), t.end(), m, re)) return std::nullopt;
    int offset = 0;
    if (m[8].matched) {
        offset = std::stoi(m[9].str()) * 60 + std::stoi(m[10].str());
        if (m[8].str() == "-") offset = -offset;
    }
    return make_instant(std::stoi(m[1].str()), std::stoi(m[2].str()), std::stoi(m[3].str()),
                        std::stoi(m[4].str()), std::stoi(m[5].str()), std::stoi(m[6].str()),
                        offset);
}

// Consumes a run of non-space characters followed by one space.
std::optional<std::string_view> take_token(std::string_view& s) {
    auto sp = s.find(' ');
    if (sp == 0 || sp == std::string_view::npos) return std::nullopt;
    auto tok = s.substr(0, sp);
    s.remove_prefix(sp + 1);
    return tok;
}

// Parses ` ddd bytes` (status and size) at the start of `s`; on success
// advances `s` past them.
bool take_status_and_bytes(std::string_view& s, int& status, std::optional<std::uint64_t>& bytes) {
    if (s.size() < 4 || s[0] != ' ' || !all_digits(s.substr(1, 3))) return false;
    std::string_view rest = s.substr(4);
    if (rest.empty() || rest[0] != ' ') return false;
    rest.remove_prefix(1);
    auto end = rest.find(' ');
    auto size_tok = rest.substr(0, end);
    if (size_tok != "-" && !all_digits(size_tok)) return false;
    status = std::stoi(std::string(s.substr(1, 3)));
    bytes = size_tok == "-" || size_tok.size() > 19
                ? std::nullopt
                : std::optional<std::uint64_t>(std::stoull(std::string(size_tok)));
    s = end == std::string_view::npos ? std::string_view{} : rest.substr(end);
    return true;
}

// ` "referrer" "user agent"` up to end of line.
bool take_referrer_and_agent(std::string_view s, std::string& referrer, std::string& agent) {
    if (!s.starts_with(" \"") || !s.ends_with('"') || s.size() < 7) return false;
    std::string_view body = s.substr(2, s.size() - 3);
    auto split = body.find("\" \"");
    if (split == std::string_view::npos) return false;
    referrer = std::string(body.substr(0, split));
    agent = std::string(body.substr(split + 3));
    return true;
}

std::optional<LogEntry> parse_combined(std::string_view line) {
    std::string_view s = line;
    auto ip = take_token(s);
    if (!ip || !looks_like_ip(*ip)) return std::nullopt;
    if (!take_token(s) || !take_token(s)) return std::nullopt;  // ident, user
    if (!s.starts_with('[')) return std::nullopt;
    auto close = s.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    std::string_view time_text = s.substr(1, close - 1);
    s.remove_prefix(close + 1);
    if (!s.starts_with(" \"")) return std::nullopt;
    s.remove_prefix(2);

    // The request ends at the first quote followed by a valid status/size
    // pair and the referrer/agent tail; payloads may contain stray quotes.
    for (std::size_t q = s.find('"'); q != std::string_view::npos; q = s.find('"', q + 1)) {
        std::string_view tail = s.substr(q + 1);
        int status = 0;
        std::optional<std::uint64_t> bytes;
        if (!take_status_and_bytes(tail, status, bytes)) continue;
        std::string referrer, agent;
        if (!take_referrer_and_agent(tail, referrer, agent)) continue;
        if (status < 100 || status > 599) return std::nullopt;

        std::string_view request = s.substr(0, q);
        auto first = request.find(' ');
        auto last = request.rfind(' ');
        if (first == std::string_view::npos || first == last) return std::nullopt;
        std::string_view method = request.substr(0, first);
        std::string_view protocol = request.substr(last + 1);
        if (method.empty() || !std::all_of(method.begin(), method.end(), [](char c) {
                return std::isupper(static_cast<unsigned char>(c)) != 0;
            }))
            return std::nullopt;
        if (!protocol.starts_with("HTTP/")) return std::nullopt;
        std::string_view target = request.substr(first + 1, last - first - 1);

        LogEntry e;
        e.raw = std::string(line);
        e.format = LogFormat::AccessCombined;
        e.source_ip = std::string(*ip);
        e.timestamp = parse_clf_time(time_text);
        e.method = std::string(method);
        e.protocol = std::string(protocol);
        auto qmark = target.find('?');
        e.path = std::string(target.substr(0, qmark));
        if (qmark != std::string_view::npos) e.query = std::string(target.substr(qmark + 1));
        e.status = status;
        e.bytes = bytes;
        // "-" is the combined-format placeholder for a missing value.
        if (referrer != "-") e.referrer = std::move(referrer);
        if (agent != "-") e.user_agent = std::move(agent);
        return e;
    }
    return std::nullopt;
}

const std::regex& auth_message_re() {
    static const std::regex re(
        R"((Failed|Accepted) (password|publickey|keyboard-interactive)|Invalid user |authentication failure|FAILED LOGIN|ROOT LOGIN|session opened for user|Disconnected from (invalid|authenticating) user|maximum authentication attempts)",
        std::regex::icase);
    return re;
}

std::optional<std::string> find_auth_source_ip(std::string_view msg) {
    static const std::regex re(R"((?:\bfrom|rhost=)\s*([0-9A-Fa-f:.]+))", std::regex::icase);
    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_search(msg.begin(), msg.end(), m, re) && looks_like_ip(m[1].str()))
        return m[1].str();
    return std::nullopt;
}

std::optional<LogEntry> parse_auth(std::string_view line) {
    // "Mar 16 01:05:33 host sshd[123]: msg" or "2025-03-16T01:05:33Z host sshd[123]: msg"
    static const std::regex bsd_header(
        R"(^[A-Z][a-z]{2}\s+\d{1,2}\s+\d{2}:\d{2}:\d{2}\s+\S+\s+([^\s:\[]+)(?:\[\d+\])?:\s?(.*)$)");
    static const std::regex iso_header(R"(^(\S+)\s+\S+\s+([^\s:\[]+)(?:\[\d+\])?:\s?(.*)$)");
    static const std::regex auth_program(
        R"(^(sshd|sudo|su|login|passwd|systemd-logind|vsftpd|dovecot|proftpd|pam_\w+|gdm-password|polkitd)$)");

    std::match_results<std::string_view::const_iterator> m;
    std::optional<std::string> program;
    std::string_view message = line;
    std::optional<sys_seconds> ts;
    if (std::regex_match(line.begin(), line.end(), m, bsd_header)) {
        program = m[1].str();
        message = std::string_view(m[2].first, m[2].second);
    } else if (std::regex_match(line.begin(), line.end(), m, iso_header)) {
        if (auto t = parse_iso_time(std::string_view(m[1].first, m[1].second))) {
            ts = t;
            program = m[2].str();
            message = std::string_view(m[3].first, m[3].second);
        }
    }

    const bool auth_text = std::regex_search(message.begin(), message.end(), auth_message_re());
    const bool auth_prog = program && std::regex_match(*program, auth_program);
    if (!auth_text && !(auth_prog && !message.empty())) return std::nullopt;

    LogEntry e;
    e.raw = std::string(line);
    e.format = LogFormat::AuthEvent;
    e.timestamp = ts;
    e.message = std::string(trim(message));
    e.source_ip = find_auth_source_ip(message);
    return e;
}

}  // namespace

std::string_view to_string(LogFormat f) {
    switch (f) {
        case LogFormat::AccessCombined: return "access_combined";
        case LogFormat::AuthEvent: return "auth_event";
        case LogFormat::Unstructured: return "unstructured";
    }
    return "unstructured";
}

std::string LogEntry::request_target() const {
    std::string out = path.value_or("");
    if (query) {
        out += '?';
        out += *query;
    }
    return out;
}

LogEntry parse_line(std::string_view line) {
    std::string_view body = line;
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.remove_suffix(1);
    if (trim(body).empty()) throw EmptyLine("log line is blank");

    if (auto e = parse_combined(body)) {
        e->raw = std::string(line);
        return *e;
    }
    if (auto e = parse_auth(trim(body))) {
        e->raw = std::string(line);
        return *e;
    }
    LogEntry e;
    e.raw = std::string(line);
    e.format = LogFormat::Unstructured;
    e.message = std::string(trim(body));
    return e;
}

std::optional<InputFormat> input_format_for(std::string_view filename) {
    auto dot = filename.rfind('.');
    if (dot == std::string_view::npos) return std::nullopt;
    const std::string ext = to_lower(filename.substr(dot));
    if (ext == ".log" || ext == ".txt") return InputFormat::Lines;
    if (ext == ".csv") return InputFormat::Csv;
    return std::nullopt;
}

ParsedStream parse_stream(std::span<const std::string> lines) {
    ParsedStream out;
    out.entries.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) {
            ++out.skipped;
            continue;
        }
        out.entries.push_back(parse_line(lines[i]));
        if (out.entries.back().format == LogFormat::Unstructured)
            out.diagnostics.push_back({i + 1, "unrecognized format, kept as unstructured text"});
    }
    return out;
}

std::vector<std::vector<std::string>> read_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool in_quotes = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            row.push_back(std::move(cell));
            cell.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            cell += c;
        }
    }
    if (any) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string csv_escape(std::string_view cell) {
    if (cell.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(cell);
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

ParsedStream parse_text(std::string_view text, InputFormat format) {
    std::vector<std::string> lines;
    if (format == InputFormat::Lines) {
        std::size_t start = 0;
        while (start < text.size()) {
            auto nl = text.find('\n', start);
            auto end = nl == std::string_view::npos ? text.size() : nl;
            std::string_view l = text.substr(start, end - start);
            if (l.ends_with('\r')) l.remove_suffix(1);
            lines.emplace_back(l);
            start = end + 1;
        }
        return parse_stream(lines);
    }

    auto rows = read_csv(text);
    bool header_skipped = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string first = rows[i].empty() ? std::string() : rows[i][0];
        if (!header_skipped && lines.empty() && iequals(trim(first), "log")) {
            header_skipped = true;
            lines.emplace_back();  // keeps row numbering aligned
            continue;
        }
        lines.push_back(first);
    }
    auto parsed = parse_stream(lines);
    if (header_skipped) {
        --parsed.skipped;
        parsed.diagnostics.insert(parsed.diagnostics.begin(), {1, "CSV header row skipped"});
    }
    return parsed;
}

}  // namespace opensoc
