#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bident/extraction.hpp"

namespace bident {

// One-vs-rest counts for a designated positive class.
struct ConfusionCounts {
  std::string positive_class;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
};

// Precision and recall; nullopt where the denominator is zero.
struct EvalMetrics {
  std::string positive_class;
  std::optional<double> precision;
  std::optional<double> recall;
};

ConfusionCounts confusion(std::span<const std::string> gold, std::span<const std::string> predicted,
                          std::string_view positive_class);

EvalMetrics metrics(const ConfusionCounts& counts);

nlohmann::ordered_json to_json(const ConfusionCounts& counts, const EvalMetrics& m);

// Full gold x predicted count matrix over `classes`.
struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<std::uint64_t>> counts;  // [gold][predicted]
};

ConfusionMatrix confusion_matrix(std::span<const std::string> gold, std::span<const std::string> predicted,
                                 std::span<const std::string_view> classes);
nlohmann::ordered_json to_json(const ConfusionMatrix& matrix);

// ---------------------------------------------------------------------------
// Manual validation

struct AnnotationRow {
  std::string source_id;
  std::string s1;
  std::string s2;
  std::string verdict;
};

struct AnnotationSheet {
  std::vector<AnnotationRow> rows;
};

// min(n, |records|) records drawn without replacement, in record order.
AnnotationSheet sample_for_validation(std::span<const ExtractionRecord> records, std::size_t n,
                                      std::uint64_t seed);

// TSV with header source_id, s1, s2, verdict. Tabs, newlines and backslashes in
// fields are written as \t, \n, \r and \\.
void write_tsv(std::ostream& out, const AnnotationSheet& sheet);
AnnotationSheet read_tsv(std::istream& in);

// Fraction of rows whose verdict is yes. Verdicts are yes/no, case-insensitive;
// anything else raises DataError naming the row.
double hand_precision(const AnnotationSheet& sheet);

// ---------------------------------------------------------------------------
// Similarity diagnostics

std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
// Over Unicode code points.
std::size_t levenshtein(std::string_view a, std::string_view b);

// levenshtein / max(|a|, |b|) in code points; 0 for two empty strings.
double normalized_edit_distance(std::string_view a, std::string_view b);

// min/max of whitespace token counts; 1 when both are empty.
double token_length_ratio(std::string_view a, std::string_view b);

struct Summary {
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Quartiles interpolate linearly between order statistics.
std::optional<Summary> summarize(std::vector<double> values);

struct SimilarityStats {
  std::size_t count = 0;
  std::optional<Summary> edit_distance;
  std::optional<Summary> length_ratio;
};

SimilarityStats similarity_stats(std::span<const ExtractionRecord> records);
nlohmann::ordered_json to_json(const SimilarityStats& stats);

// ---------------------------------------------------------------------------
// Cross-language overlap

struct OverlapReport {
  std::vector<std::string> languages;
  std::size_t unique_count = 0;
  // at_least[k-1]: source ids extracted in >= k languages.
  std::vector<std::size_t> at_least;
  // exactly[k-1]: source ids extracted in exactly k languages.
  std::vector<std::size_t> exactly;
  // Distinct pivot texts among extracted ids, when pivot texts are supplied.
  std::optional<std::size_t> unique_pivot_count;
};

// Membership is keyed by source id. `pivot_text` optionally maps source ids to
// a pivot-language text; ids without one count as their own text.
OverlapReport overlap(const std::map<std::string, std::vector<ExtractionRecord>>& runs,
                      const std::map<std::string, std::string>* pivot_text = nullptr);
nlohmann::ordered_json to_json(const OverlapReport& report);

}  // namespace bident
