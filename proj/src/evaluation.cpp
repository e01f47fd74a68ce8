#include "opensoc/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "opensoc/fields.hpp"
#include "opensoc/prompting.hpp"

namespace opensoc {

using ojson = nlohmann::ordered_json;

RecordScore score_record(const ThreatAnalysis& truth, const ExtractionResult& predicted,
                         std::size_t index, MitreMatchMode mitre_mode) {
    RecordScore s;
    s.index = index;
    s.truth = truth;
    s.predicted = predicted;
    if (predicted.threat) {
        s.category_correct = predicted.threat->category == truth.threat.category;
        s.threat_exact = truth.threat.equivalent(*predicted.threat);
    }
    s.severity_correct = predicted.severity && *predicted.severity == truth.severity;
    if (truth.mitre)
        s.mitre_base_correct = predicted.mitre && mitre_match(*predicted.mitre, *truth.mitre, mitre_mode);
    return s;
}

// ------------------------------------------------------------ confusion

ConfusionMatrix::ConfusionMatrix(std::vector<ThreatCategory> classes) {
    std::sort(classes.begin(), classes.end(),
              [](auto a, auto b) { return index_of(a) < index_of(b); });
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    classes_ = std::move(classes);
    cells_.assign(classes_.size(), std::vector<std::size_t>(classes_.size() + 1, 0));
}

ConfusionMatrix ConfusionMatrix::from_scores(const std::vector<RecordScore>& scores) {
    std::vector<ThreatCategory> classes;
    for (const auto& s : scores) {
        classes.push_back(s.truth.threat.category);
        if (s.predicted.threat) classes.push_back(s.predicted.threat->category);
    }
    ConfusionMatrix m(std::move(classes));
    for (const auto& s : scores)
        m.add(s.truth.threat.category,
              s.predicted.threat ? std::optional(s.predicted.threat->category) : std::nullopt);
    return m;
}

std::size_t ConfusionMatrix::slot(ThreatCategory c) const {
    auto it = std::find(classes_.begin(), classes_.end(), c);
    if (it == classes_.end())
        throw InvalidValue("category " + std::string(short_name(c)) + " not in confusion matrix");
    return static_cast<std::size_t>(it - classes_.begin());
}

void ConfusionMatrix::add(ThreatCategory truth, std::optional<ThreatCategory> predicted) {
    auto& row = cells_[slot(truth)];
    ++row[predicted ? slot(*predicted) : classes_.size()];
}

std::size_t ConfusionMatrix::at(ThreatCategory truth, ThreatCategory predicted) const {
    return cells_[slot(truth)][slot(predicted)];
}

std::size_t ConfusionMatrix::none(ThreatCategory truth) const {
    return cells_[slot(truth)].back();
}

std::size_t ConfusionMatrix::row_total(ThreatCategory truth) const {
    const auto& row = cells_[slot(truth)];
    return std::accumulate(row.begin(), row.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::column_total(ThreatCategory predicted) const {
    const std::size_t j = slot(predicted);
    std::size_t sum = 0;
    for (const auto& row : cells_) sum += row[j];
    return sum;
}

std::size_t ConfusionMatrix::total() const {
    std::size_t sum = 0;
    for (const auto& row : cells_) sum += std::accumulate(row.begin(), row.end(), std::size_t{0});
    return sum;
}

std::size_t ConfusionMatrix::trace() const {
    std::size_t sum = 0;
    for (std::size_t i = 0; i < classes_.size(); ++i) sum += cells_[i][i];
    return sum;
}

ConfusionMatrix ConfusionMatrix::top_k(std::size_t k) const {
    std::vector<ThreatCategory> order = classes_;
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return row_total(a) > row_total(b); });
    order.resize(std::min(k, order.size()));
    ConfusionMatrix out(order);
    for (auto t : out.classes_) {
        for (auto p : out.classes_) out.cells_[out.slot(t)][out.slot(p)] = at(t, p);
        out.cells_[out.slot(t)].back() = none(t);
    }
    return out;
}

std::string ConfusionMatrix::to_text() const {
    std::ostringstream os;
    char buf[32];
    os << "actual\\pred";
    for (auto c : classes_) {
        std::snprintf(buf, sizeof buf, "%7s", std::string(short_name(c)).c_str());
        os << buf;
    }
    os << "   none\n";
    for (std::size_t i = 0; i < classes_.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%-11s", std::string(short_name(classes_[i])).c_str());
        os << buf;
        for (auto v : cells_[i]) {
            std::snprintf(buf, sizeof buf, "%7zu", v);
            os << buf;
        }
        os << '\n';
    }
    return os.str();
}

// --------------------------------------------------------------- report

double f1_from(double precision, double recall) {
    const double denom = precision + recall;
    return denom > 0 ? 2.0 * precision * recall / denom : 0.0;
}

EvalReport compute_report(const std::vector<RecordScore>& scores) {
    if (scores.empty()) throw EmptyEvaluation("no scored records");
    EvalReport r;
    r.n = scores.size();
    const double n = static_cast<double>(r.n);

    std::size_t exact = 0, severity = 0, mitre_ok = 0;
    for (const auto& s : scores) {
        exact += s.threat_exact;
        severity += s.severity_correct;
        if (s.mitre_base_correct) {
            ++r.mitre_scored;
            mitre_ok += *s.mitre_base_correct;
        }
        if (s.predicted.empty()) ++r.empty_predictions;
    }
    r.threat_accuracy = static_cast<double>(exact) / n;
    r.severity_accuracy = static_cast<double>(severity) / n;
    if (r.mitre_scored > 0)
        r.mitre_base_accuracy = static_cast<double>(mitre_ok) / static_cast<double>(r.mitre_scored);

    r.confusion = ConfusionMatrix::from_scores(scores);
    r.category_accuracy = static_cast<double>(r.confusion.trace()) / n;

    double p_sum = 0, r_sum = 0;
    std::size_t supported = 0;
    for (auto c : r.confusion.classes()) {
        ClassMetrics m;
        const auto diag = static_cast<double>(r.confusion.at(c, c));
        const auto col = r.confusion.column_total(c);
        m.support = r.confusion.row_total(c);
        m.precision = col ? diag / static_cast<double>(col) : 0.0;
        m.recall = m.support ? diag / static_cast<double>(m.support) : 0.0;
        m.f1 = f1_from(m.precision, m.recall);
        if (m.support > 0) {
            p_sum += m.precision;
            r_sum += m.recall;
            ++supported;
        }
        r.per_class.emplace(c, m);
    }
    r.macro_precision = p_sum / static_cast<double>(supported);
    r.macro_recall = r_sum / static_cast<double>(supported);
    r.f1 = f1_from(r.macro_precision, r.macro_recall);
    return r;
}

// ------------------------------------------------------------------ run

namespace {

ojson report_to_json(const EvalReport& r) {
    ojson o;
    o["n"] = r.n;
    o["threat_accuracy"] = r.threat_accuracy;
    o["category_accuracy"] = r.category_accuracy;
    o["severity_accuracy"] = r.severity_accuracy;
    o["macro_precision"] = r.macro_precision;
    o["macro_recall"] = r.macro_recall;
    o["f1"] = r.f1;
    o["empty_predictions"] = r.empty_predictions;
    ojson per_class = ojson::object();
    for (const auto& [c, m] : r.per_class) {
        per_class[std::string(display_name(c))] = {{"precision", m.precision},
                                                   {"recall", m.recall},
                                                   {"f1", m.f1},
                                                   {"support", m.support}};
    }
    o["per_class"] = std::move(per_class);

    ojson columns = ojson::array();
    for (auto c : r.confusion.classes()) columns.push_back(display_name(c));
    ojson rows = ojson::array();
    for (auto t : r.confusion.classes()) {
        ojson row = ojson::array();
        for (auto p : r.confusion.classes()) row.push_back(r.confusion.at(t, p));
        row.push_back(r.confusion.none(t));
        rows.push_back(std::move(row));
    }
    ojson cols_with_none = columns;
    cols_with_none.push_back("none");
    o["confusion"] = {{"rows", columns}, {"columns", cols_with_none}, {"counts", rows}};
    o["mitre"] = {{"mode", "base"},
                  {"accuracy", r.mitre_base_accuracy ? ojson(*r.mitre_base_accuracy) : ojson()},
                  {"scored", r.mitre_scored}};
    return o;
}

ojson record_to_json(const EvalRecordResult& rec) {
    ojson o;
    o["index"] = rec.score.index;
    o["input"] = rec.input;
    o["truth"] = fields_to_json(rec.score.truth);
    o["predicted"] = fields_to_json(rec.score.predicted);
    o["raw_output"] = rec.raw_output;
    o["threat_exact"] = rec.score.threat_exact;
    o["category_correct"] = rec.score.category_correct;
    o["severity_correct"] = rec.score.severity_correct;
    o["mitre_base_correct"] =
        rec.score.mitre_base_correct ? ojson(*rec.score.mitre_base_correct) : ojson();
    o["latency_ms"] = rec.latency_ms;
    o["attempts"] = rec.attempts;
    if (!rec.score.predicted.diagnostics.empty()) o["diagnostics"] = rec.score.predicted.diagnostics;
    return o;
}

}  // namespace

std::string outcome_to_json(const EvalOutcome& outcome) {
    ojson o;
    o["backend"] = outcome.backend;
    o["started"] = format_utc(outcome.started);
    o["finished"] = format_utc(outcome.finished);
    o["truncated"] = outcome.truncated;
    ojson recs = ojson::array();
    for (const auto& r : outcome.records) recs.push_back(record_to_json(r));
    o["records"] = std::move(recs);
    o["report"] = outcome.records.empty() ? ojson() : report_to_json(outcome.report);
    return o.dump(2, ' ', false, ojson::error_handler_t::replace) + "\n";
}

void write_outcome(const std::string& path, const EvalOutcome& outcome) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot write " + path);
    out << outcome_to_json(outcome);
    if (!out) throw IoFailure("write failed for " + path);
}

EvalOutcome run_evaluation(const std::vector<ExampleRecord>& records, Backend& backend,
                           const EvalOptions& options) {
    EvalOutcome outcome;
    outcome.backend = backend.name();
    outcome.started = std::chrono::system_clock::now();

    std::vector<std::optional<EvalRecordResult>> slots(records.size());
    std::mutex mu;
    auto body = [&](std::size_t i) {
        const auto& rec = records[i];
        const BackendResponse resp = backend.analyze(build_prompt(rec.input));
        EvalRecordResult r;
        r.input = rec.input;
        r.raw_output = resp.raw_text;
        r.latency_ms = std::chrono::duration<double, std::milli>(resp.latency).count();
        r.attempts = resp.attempt_count;
        r.score = score_record(rec.truth, extract_fields(resp.raw_text), i, options.mitre_mode);
        std::lock_guard lock(mu);
        slots[i] = std::move(r);
        return true;
    };

    auto collect = [&] {
        outcome.records.clear();
        std::vector<RecordScore> scores;
        for (auto& s : slots) {
            if (!s) continue;
            scores.push_back(s->score);
            outcome.records.push_back(std::move(*s));
        }
        if (!scores.empty()) outcome.report = compute_report(scores);
        outcome.finished = std::chrono::system_clock::now();
    };

    try {
        run_parallel(records.size(), options.concurrency, body);
    } catch (const BackendError&) {
        collect();
        outcome.truncated = true;
        if (options.results_path) write_outcome(*options.results_path, outcome);
        throw;
    }
    collect();
    if (outcome.records.empty()) throw EmptyEvaluation("evaluation split has no records");
    if (options.results_path) write_outcome(*options.results_path, outcome);
    return outcome;
}

// -------------------------------------------------------------- display

std::string summary_table(const EvalReport& r) {
    std::ostringstream os;
    char buf[128];
    auto pct = [&](const char* label, double v) {
        std::snprintf(buf, sizeof buf, "%-34s %7.1f%%\n", label, 100.0 * v);
        os << buf;
    };
    auto dec = [&](const char* label, double v) {
        std::snprintf(buf, sizeof buf, "%-34s %8.2f\n", label, v);
        os << buf;
    };
    std::snprintf(buf, sizeof buf, "%-34s %8s\n", "Metric", "Value");
    os << buf << std::string(43, '-') << '\n';
    pct("Threat Classification Accuracy", r.threat_accuracy);
    dec("Threat Precision", r.macro_precision);
    dec("Threat Recall", r.macro_recall);
    dec("Threat F1 Score", r.f1);
    pct("Severity Accuracy", r.severity_accuracy);
    pct("Threat Category Accuracy", r.category_accuracy);
    std::snprintf(buf, sizeof buf, "%-34s %8zu\n", "Records", r.n);
    os << buf;
    os << "\nMITRE technique mapping (excluded from primary metrics)\n";
    if (r.mitre_base_accuracy) {
        pct("MITRE Accuracy (base technique)", *r.mitre_base_accuracy);
    } else {
        std::snprintf(buf, sizeof buf, "%-34s %8s\n", "MITRE Accuracy (base technique)", "n/a");
        os << buf;
    }
    return os.str();
}

std::string outcome_to_csv(const EvalOutcome& outcome) {
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& r : outcome.records) {
        out += csv_row(r.input, r.score.predicted);
        out += '\n';
    }
    return out;
}

}  // namespace opensoc
