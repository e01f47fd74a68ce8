#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace opensoc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    /// Short machine-readable class name, e.g. "RemoteError".
    virtual const char* kind() const noexcept { return "Error"; }
};

#define OPENSOC_DEFINE_ERROR_FROM(Name, Base)                                 \
    class Name : public Base {                                                \
    public:                                                                   \
        using Base::Base;                                                     \
        const char* kind() const noexcept override { return #Name; }         \
    }

#define OPENSOC_DEFINE_ERROR(Name) OPENSOC_DEFINE_ERROR_FROM(Name, Error)

OPENSOC_DEFINE_ERROR(InvalidValue);

// Order follows the reference dataset distribution, most frequent first; Benign and
// OtherMixed come last.
enum class ThreatCategory : std::uint8_t {
    BruteForce,
    SqlInjection,
    PathTraversal,
    Xss,
    CommandInjection,
    Scanner,
    Log4jJndi,
    RemoteFileInclusion,
    SuspiciousAuth,
    OtherMixed,
    Benign,
};

inline constexpr std::size_t kCategoryCount = 11;

inline constexpr std::array<ThreatCategory, kCategoryCount> kAllCategories = {
    ThreatCategory::BruteForce,       ThreatCategory::SqlInjection,
    ThreatCategory::PathTraversal,    ThreatCategory::Xss,
    ThreatCategory::CommandInjection, ThreatCategory::Scanner,
    ThreatCategory::Log4jJndi,        ThreatCategory::RemoteFileInclusion,
    ThreatCategory::SuspiciousAuth,   ThreatCategory::OtherMixed,
    ThreatCategory::Benign,
};

constexpr std::size_t index_of(ThreatCategory c) { return static_cast<std::size_t>(c); }

/// Canonical display name, e.g. "SQL Injection" or "Path / Directory Traversal".
std::string_view display_name(ThreatCategory c);
/// Short code used in compact tables: BF, SQLi, PT, XSS, CI, Scan, ...
std::string_view short_name(ThreatCategory c);
/// Identifier-style name ("SqlInjection"), used in rule files.
std::string_view enum_name(ThreatCategory c);
std::optional<ThreatCategory> category_from_enum_name(std::string_view name);

/// Case folding, whitespace collapsing and dash unification (hyphen, en dash, em dash, double hyphen).
/// Two label texts are equivalent iff their normal forms are equal.
std::string normalize_label_text(std::string_view text);

struct ThreatLabel {
    ThreatCategory category = ThreatCategory::Benign;
    std::optional<std::string> subtype;

    /// "<display name>" or "<display name>", an em dash, then "<subtype>".
    std::string render() const;

    /// Recognizes a category name or alias, optionally followed by a
    /// subtype (after a dash separator, or as trailing words). Unknown text
    /// becomes OtherMixed with the original text as subtype.
    static ThreatLabel parse(std::string_view text);

    /// Normalized comparison: same category and equivalent subtype text.
    bool equivalent(const ThreatLabel& other) const;

    friend bool operator==(const ThreatLabel&, const ThreatLabel&) = default;
};

struct MitreTechniqueId {
    int base = 0;              // 1000..9999
    std::optional<int> sub;    // 0..999

    MitreTechniqueId() = default;
    MitreTechniqueId(int base_id, std::optional<int> sub_id = std::nullopt);

    /// T#### or T####.###
    std::string render() const;
    /// Strict canonical parse; throws InvalidValue.
    static MitreTechniqueId parse(std::string_view text);

    friend bool operator==(const MitreTechniqueId&, const MitreTechniqueId&) = default;
};

enum class Severity : std::uint8_t { Low, Medium, High, Critical };

inline constexpr std::array<Severity, 4> kAllSeverities = {
    Severity::Low, Severity::Medium, Severity::High, Severity::Critical};

std::string_view to_string(Severity s);
/// Case-insensitive; throws InvalidValue for anything but the four levels.
Severity parse_severity(std::string_view text);
std::optional<Severity> try_parse_severity(std::string_view text);

struct RiskBand {
    int low;
    int high;
    constexpr bool contains(int v) const { return v >= low && v <= high; }
    constexpr int clamp(int v) const { return v < low ? low : (v > high ? high : v); }
    friend constexpr bool operator==(const RiskBand&, const RiskBand&) = default;
};

/// LOW [0,39], MEDIUM [40,69], HIGH [70,89], CRITICAL [90,100].
RiskBand severity_band(Severity s);

/// The six-field verdict. `mitre` is empty only for Benign verdicts, which
/// render the identifier as "N/A".
struct ThreatAnalysis {
    ThreatLabel threat;
    std::optional<MitreTechniqueId> mitre;
    Severity severity = Severity::Low;
    int risk_score = 0;
    std::string evidence;
    std::string recommendation;

    /// Throws InvalidValue when a field violates its invariant.
    void validate() const;

    friend bool operator==(const ThreatAnalysis&, const ThreatAnalysis&) = default;
};

/// Text fields of an analysis must be non-empty, single-line and trimmed.
bool is_single_line_text(std::string_view text);

// Small string helpers shared across modules.
std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

/// "2025-03-16T01:05:33Z" (UTC, second precision).
std::string format_utc(std::chrono::system_clock::time_point t);

}  // namespace opensoc
