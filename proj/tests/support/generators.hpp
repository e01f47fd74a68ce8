#pragma once

// Hand-rolled random generators for property tests.

#include <cctype>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "opensoc/core.hpp"

namespace testgen {

using Rng = std::mt19937_64;

inline std::size_t below(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

inline int between(Rng& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
    return v[below(rng, v.size())];
}

/// Single-line printable text; words drawn from a pool that includes
/// punctuation, quotes and colons so extraction sees awkward values.
inline std::string text(Rng& rng, int min_words = 1, int max_words = 8) {
    static const std::vector<std::string> words = {
        "GET",    "parameter", "OR",      "1=1--",      "user-agent", "'burpsuite'",
        "block",  "WAF",       "at",      "pattern;",   "in",         "/etc/passwd",
        "<script>", "a:b",     "x=1&y=2", "%27",        "Ünïcödé",    "T1190",
        "HIGH",   "risk",      "—",       "--",         "\"quoted\"", "85/100",
        "review", "logs",      "#tag",    "(parens)",   "50%",        "a,b,c"};
    const int n = between(rng, min_words, max_words);
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += pick(rng, words);
    }
    return out;
}

/// Subtype text that cannot be mistaken for a separator-led or empty label.
inline std::string subtype(Rng& rng) {
    static const std::vector<std::string> words = {"Union",   "Time-Based", "Blind",  "Reflected",
                                                   "Stored",  "Encoded",    "Double", "Boolean",
                                                   "Error",   "UA",         "v2",     "Root"};
    const int n = between(rng, 1, 3);
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += pick(rng, words);
    }
    return out;
}

inline opensoc::ThreatAnalysis analysis(Rng& rng) {
    using namespace opensoc;
    ThreatAnalysis a;
    // Every category, Benign included; OtherMixed needs a subtype that is not
    // itself a category alias, which subtype() guarantees.
    a.threat.category = kAllCategories[below(rng, kCategoryCount)];
    if (rng() % 2) a.threat.subtype = subtype(rng);
    if (a.threat.category != ThreatCategory::Benign || rng() % 2) {
        std::optional<int> sub;
        if (rng() % 3 == 0) sub = between(rng, 0, 999);
        a.mitre = MitreTechniqueId(between(rng, 1000, 9999), sub);
    }
    a.severity = kAllSeverities[below(rng, 4)];
    a.risk_score = between(rng, 0, 100);
    a.evidence = text(rng);
    a.recommendation = text(rng);
    return a;
}

/// Case and dash variants of a label text; all must be equivalent.
inline std::string label_variant(Rng& rng, const std::string& canonical) {
    std::string out;
    for (std::size_t i = 0; i < canonical.size();) {
        if (canonical.compare(i, 3, "\xE2\x80\x94") == 0) {
            static const std::vector<std::string> dashes = {"\xE2\x80\x94", "\xE2\x80\x93", "--",
                                                            "-", " - ", "  --  "};
            out += pick(rng, dashes);
            i += 3;
            continue;
        }
        char c = canonical[i++];
        if (std::isalpha(static_cast<unsigned char>(c)) && rng() % 2)
            c = static_cast<char>(std::isupper(static_cast<unsigned char>(c)) ? std::tolower(c)
                                                                              : std::toupper(c));
        if (c == ' ' && rng() % 3 == 0) {
            out += "  ";
            continue;
        }
        out += c;
    }
    return out;
}

}  // namespace testgen
