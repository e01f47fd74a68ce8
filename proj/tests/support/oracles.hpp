#pragma once

// Independent reference computations. Nothing here calls into the metric
// code under test; values are derived by direct pair counting.

#include <array>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "opensoc/core.hpp"
#include "opensoc/evaluation.hpp"
#include "opensoc/extraction.hpp"

namespace oracle {

using opensoc::ThreatCategory;
using Pair = std::pair<ThreatCategory, std::optional<ThreatCategory>>;  // truth, predicted

/// The six-category evaluation confusion counts (rows actual, columns
/// predicted, order BF SQLi PT XSS CI Scan), transcribed cell by cell.
inline constexpr std::array<ThreatCategory, 6> kSix = {
    ThreatCategory::BruteForce,       ThreatCategory::SqlInjection, ThreatCategory::PathTraversal,
    ThreatCategory::Xss,              ThreatCategory::CommandInjection, ThreatCategory::Scanner};

inline constexpr std::array<std::array<int, 6>, 6> kSixMatrix = {{
    {8, 0, 0, 0, 1, 1},
    {0, 6, 0, 2, 1, 0},
    {0, 0, 5, 0, 2, 1},
    {0, 1, 0, 4, 1, 0},
    {0, 1, 1, 0, 3, 0},
    {1, 0, 0, 0, 0, 4},
}};

inline std::vector<Pair> six_category_pairs() {
    std::vector<Pair> out;
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            for (int k = 0; k < kSixMatrix[i][j]; ++k) out.emplace_back(kSix[i], kSix[j]);
    return out;
}

/// Hand-summed from the matrix above: diagonal over row sums and column sums.
struct Frozen {
    double recall;
    double precision;
};
inline const std::map<ThreatCategory, Frozen>& six_category_frozen() {
    static const std::map<ThreatCategory, Frozen> m = {
        {ThreatCategory::BruteForce, {8.0 / 10, 8.0 / 9}},
        {ThreatCategory::SqlInjection, {6.0 / 9, 6.0 / 8}},
        {ThreatCategory::PathTraversal, {5.0 / 8, 5.0 / 6}},
        {ThreatCategory::Xss, {4.0 / 6, 4.0 / 6}},
        // Column CI sums to 1+1+2+1+3+0 = 8.
        {ThreatCategory::CommandInjection, {3.0 / 5, 3.0 / 8}},
        {ThreatCategory::Scanner, {4.0 / 5, 4.0 / 6}},
    };
    return m;
}
inline constexpr double kSixAccuracy = 30.0 / 43.0;

/// Score built only from categories: no subtype, fixed MITRE/severity.
inline opensoc::RecordScore score_pair(const Pair& p, std::size_t index = 0) {
    using namespace opensoc;
    ThreatAnalysis truth;
    truth.threat = {p.first, std::nullopt};
    truth.mitre = MitreTechniqueId(1190);
    truth.severity = Severity::High;
    truth.risk_score = 80;
    truth.evidence = "e";
    truth.recommendation = "r";
    ExtractionResult pred;
    if (p.second) {
        pred.threat = ThreatLabel{*p.second, std::nullopt};
        pred.severity = Severity::High;
    }
    return score_record(truth, pred, index);
}

inline std::vector<opensoc::RecordScore> score_pairs(const std::vector<Pair>& pairs) {
    std::vector<opensoc::RecordScore> out;
    for (std::size_t i = 0; i < pairs.size(); ++i) out.push_back(score_pair(pairs[i], i));
    return out;
}

/// Brute-force per-class metrics by scanning all pairs for each class.
struct BruteMetrics {
    std::map<ThreatCategory, double> precision, recall;
    std::map<ThreatCategory, std::size_t> support;
    double accuracy = 0;
    double macro_precision = 0, macro_recall = 0;
};

inline BruteMetrics brute_force(const std::vector<Pair>& pairs) {
    BruteMetrics m;
    std::vector<ThreatCategory> classes;
    auto note = [&](ThreatCategory c) {
        for (auto x : classes)
            if (x == c) return;
        classes.push_back(c);
    };
    for (const auto& [t, p] : pairs) {
        note(t);
        if (p) note(*p);
    }
    std::size_t correct = 0;
    for (const auto& [t, p] : pairs) correct += (p && *p == t) ? 1 : 0;
    m.accuracy = static_cast<double>(correct) / static_cast<double>(pairs.size());

    double ps = 0, rs = 0;
    int supported = 0;
    for (auto c : classes) {
        std::size_t tp = 0, predicted_c = 0, actual_c = 0;
        for (const auto& [t, p] : pairs) {
            const bool is_t = t == c;
            const bool is_p = p && *p == c;
            tp += is_t && is_p;
            predicted_c += is_p;
            actual_c += is_t;
        }
        m.precision[c] = predicted_c ? static_cast<double>(tp) / static_cast<double>(predicted_c) : 0.0;
        m.recall[c] = actual_c ? static_cast<double>(tp) / static_cast<double>(actual_c) : 0.0;
        m.support[c] = actual_c;
        if (actual_c) {
            ps += m.precision[c];
            rs += m.recall[c];
            ++supported;
        }
    }
    m.macro_precision = ps / supported;
    m.macro_recall = rs / supported;
    return m;
}

/// Two classes, supports 5 and 25, whose macro precision is 0.71 and macro
/// recall 0.66: A row (2 A, 2 B, 1 none), B row (2 A, 23 B).
/// P_A = 2/4, P_B = 23/25, R_A = 2/5, R_B = 23/25.
inline std::vector<Pair> f1_construction() {
    const auto A = ThreatCategory::Xss, B = ThreatCategory::BruteForce;
    std::vector<Pair> out;
    auto add = [&](ThreatCategory t, std::optional<ThreatCategory> p, int n) {
        for (int i = 0; i < n; ++i) out.emplace_back(t, p);
    };
    add(A, A, 2);
    add(A, B, 2);
    add(A, std::nullopt, 1);
    add(B, A, 2);
    add(B, B, 23);
    return out;
}

}  // namespace oracle
