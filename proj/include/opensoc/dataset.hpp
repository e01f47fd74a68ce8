#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "opensoc/core.hpp"
#include "opensoc/signatures.hpp"

namespace opensoc {

OPENSOC_DEFINE_ERROR(UnsatisfiableCounts);
OPENSOC_DEFINE_ERROR(IoFailure);

class MalformedRecord : public Error {
public:
    MalformedRecord(std::size_t index, const std::string& what)
        : Error("record " + std::to_string(index) + ": " + what), index_(index) {}
    const char* kind() const noexcept override { return "MalformedRecord"; }
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

struct SplitCounts {
    int train = 0;
    int eval = 0;
    friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

/// Per-category (train, eval) sizes, indexed by index_of(ThreatCategory).
using CategoryCounts = std::array<SplitCounts, kCategoryCount>;

/// The reference 450/50 distribution.
CategoryCounts reference_counts();

/// The reference proportions rescaled to the given totals (largest remainder).
CategoryCounts scaled_counts(int train_total, int eval_total);

struct ExampleRecord {
    std::string instruction;
    std::string input;
    std::string output;
    ThreatAnalysis truth;
    // Generation bucket the record was drawn for. Equals truth.threat.category
    // except for Other/Mixed lines, which are labeled by rule precedence.
    ThreatCategory slot = ThreatCategory::Benign;
};

struct DatasetSplit {
    std::vector<ExampleRecord> train;
    std::vector<ExampleRecord> eval;
    std::uint64_t seed = 0;
};

using Rng = std::mt19937_64;

struct LogTemplate {
    std::string name;
    std::function<std::string(Rng&)> make;
};

/// Log-line templates per category.
class TemplateLibrary {
public:
    static const TemplateLibrary& standard();

    void add(ThreatCategory c, LogTemplate t) { by_category_[index_of(c)].push_back(std::move(t)); }
    const std::vector<LogTemplate>& templates(ThreatCategory c) const {
        return by_category_[index_of(c)];
    }

private:
    std::array<std::vector<LogTemplate>, kCategoryCount> by_category_;
};

/// Deterministic for a fixed seed. Ground truth comes from classify_entry
/// against `rules`; inputs are unique across both splits.
DatasetSplit generate_dataset(std::uint64_t seed, const CategoryCounts& counts = reference_counts(),
                              const TemplateLibrary& templates = TemplateLibrary::standard(),
                              const RuleTable& rules = builtin_rule_table());

/// Tally by generation slot.
CategoryCounts count_by_slot(const std::vector<ExampleRecord>& train,
                             const std::vector<ExampleRecord>& eval);

/// Alpaca JSON array with exactly the keys instruction, input, output.
std::string records_to_json(const std::vector<ExampleRecord>& records);
/// Truth is re-derived from each output block; throws MalformedRecord.
std::vector<ExampleRecord> records_from_json(std::string_view json_text);

void save_records(const std::string& path, const std::vector<ExampleRecord>& records);
std::vector<ExampleRecord> load_records(const std::string& path);

inline constexpr std::string_view kTrainFile = "soc_train.json";
inline constexpr std::string_view kEvalFile = "soc_eval.json";

/// Writes soc_train.json and soc_eval.json into `dir` (created if missing).
void save_split(const std::string& dir, const DatasetSplit& split);
DatasetSplit load_split(const std::string& dir);

}  // namespace opensoc
