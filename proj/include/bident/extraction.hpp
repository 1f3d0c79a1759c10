#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bident/corpus.hpp"
#include "bident/decision.hpp"
#include "bident/scoring.hpp"

namespace bident {

// Which reverse-direction prediction admits a pair: entailment yields
// paraphrases, neutral yields hard negatives (argmax only).
enum class Keep { entailment, neutral };

std::string_view to_string(Keep keep);
Keep parse_keep(std::string_view text);

// An extracted pair, oriented (original hypothesis, original premise).
struct ExtractionRecord {
  std::string source_id;
  std::string s1;
  std::string s2;
  // Probability of the kept class in the reversed direction.
  double positive_probability = 0.0;
  std::string positive_class;
  DecisionRule rule = DecisionRule::argmax();
  std::string language;
  // Premise and hypothesis are identical.
  bool trivial = false;
};

nlohmann::ordered_json to_json(const ExtractionRecord& record);
ExtractionRecord extraction_record_from_json(const nlohmann::json& j);

// An entailment-labeled pair that the reverse direction did not admit.
struct NegativeRecord {
  std::string source_id;
  std::string s1;
  std::string s2;
  std::string predicted_class;
  LabelDistribution distribution;
  std::string language;
};

nlohmann::ordered_json to_json(const NegativeRecord& record);

struct ExtractionCounts {
  std::size_t input = 0;
  std::size_t entailment_selected = 0;
  std::size_t scored = 0;
  std::size_t extracted = 0;
  std::size_t trivial = 0;
  std::size_t negatives = 0;
};

nlohmann::ordered_json to_json(const ExtractionCounts& counts);

struct ExtractionOptions {
  ScoreOptions scoring;
  bool collect_negatives = false;
};

struct ExtractionResult {
  std::vector<ExtractionRecord> records;
  std::vector<NegativeRecord> negatives;
  ExtractionCounts counts;
};

// Records with gold label entailment, in input order. Throws DataError if the
// split is not an NLI split.
std::vector<Record> select_entailed(const DatasetSplit& split);

// Selects entailment pairs, scores them reversed, and keeps those whose reverse
// prediction satisfies `rule` for the kept class. Output follows input order.
ExtractionResult extract(const DatasetSplit& split, Scorer& scorer, const DecisionRule& rule, Keep keep,
                         const ExtractionOptions& options = {});

}  // namespace bident
