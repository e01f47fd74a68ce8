#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opensoc/backend.hpp"
#include "opensoc/core.hpp"
#include "opensoc/dataset.hpp"
#include "opensoc/extraction.hpp"

namespace opensoc {

OPENSOC_DEFINE_ERROR(EmptyEvaluation);

struct RecordScore {
    std::size_t index = 0;
    ThreatAnalysis truth;
    ExtractionResult predicted;
    bool threat_exact = false;
    bool category_correct = false;
    bool severity_correct = false;
    // Empty when the truth carries no technique id (Benign).
    std::optional<bool> mitre_base_correct;
};

RecordScore score_record(const ThreatAnalysis& truth, const ExtractionResult& predicted,
                         std::size_t index = 0,
                         MitreMatchMode mitre_mode = MitreMatchMode::Base);

/// Truth categories by row, predicted categories by column, plus a trailing
/// "none" column for records whose extraction produced no threat label.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    /// Rows and columns are `classes` (deduplicated, kept in report order).
    explicit ConfusionMatrix(std::vector<ThreatCategory> classes);

    static ConfusionMatrix from_scores(const std::vector<RecordScore>& scores);

    void add(ThreatCategory truth, std::optional<ThreatCategory> predicted);

    const std::vector<ThreatCategory>& classes() const { return classes_; }
    std::size_t at(ThreatCategory truth, ThreatCategory predicted) const;
    std::size_t none(ThreatCategory truth) const;
    std::size_t row_total(ThreatCategory truth) const;     // includes "none"
    std::size_t column_total(ThreatCategory predicted) const;
    std::size_t total() const;
    std::size_t trace() const;

    /// The k classes with the largest row totals (ties in report order),
    /// restricted to those rows and columns; other predictions are dropped.
    ConfusionMatrix top_k(std::size_t k) const;

    /// Fixed-width text table using short category names.
    std::string to_text() const;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t slot(ThreatCategory c) const;  // throws InvalidValue if absent

    std::vector<ThreatCategory> classes_;
    // classes_.size() rows of classes_.size() + 1 cells; last cell is "none".
    std::vector<std::vector<std::size_t>> cells_;
};

struct ClassMetrics {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    std::size_t support = 0;
};

struct EvalReport {
    std::size_t n = 0;
    double threat_accuracy = 0;    // exact label match, subtype included
    double category_accuracy = 0;  // trace / total of the confusion matrix
    double severity_accuracy = 0;
    double macro_precision = 0;
    double macro_recall = 0;
    double f1 = 0;
    std::map<ThreatCategory, ClassMetrics> per_class;  // classes with support or predictions
    ConfusionMatrix confusion;
    // Kept apart from the primary metrics. Empty when no record has a truth id.
    std::optional<double> mitre_base_accuracy;
    std::size_t mitre_scored = 0;
    std::size_t empty_predictions = 0;
};

/// Harmonic mean; 0 when both inputs are 0.
double f1_from(double precision, double recall);

EvalReport compute_report(const std::vector<RecordScore>& scores);

struct EvalOptions {
    std::size_t concurrency = 1;
    MitreMatchMode mitre_mode = MitreMatchMode::Base;
    std::optional<std::string> results_path;  // eval_results.json
};

struct EvalRecordResult {
    std::string input;
    std::string raw_output;
    double latency_ms = 0;
    int attempts = 0;
    RecordScore score;
};

struct EvalOutcome {
    EvalReport report;
    std::vector<EvalRecordResult> records;
    std::string backend;
    std::chrono::system_clock::time_point started;
    std::chrono::system_clock::time_point finished;
    bool truncated = false;
};

/// build_prompt -> backend -> extract_fields -> score_record for every record;
/// results are keyed by index so the outcome is independent of scheduling.
/// A backend failure aborts the run; when results_path is set the completed
/// records are still written with "truncated": true before the error is
/// rethrown.
EvalOutcome run_evaluation(const std::vector<ExampleRecord>& records, Backend& backend,
                           const EvalOptions& options = {});

std::string outcome_to_json(const EvalOutcome& outcome);
void write_outcome(const std::string& path, const EvalOutcome& outcome);

/// Summary rows: accuracy, precision, recall, F1, severity, then category
/// accuracy and the separate MITRE section. Rates as percentages or 0.xx.
std::string summary_table(const EvalReport& report);

/// Per-record CSV with the service export columns.
std::string outcome_to_csv(const EvalOutcome& outcome);

}  // namespace opensoc
