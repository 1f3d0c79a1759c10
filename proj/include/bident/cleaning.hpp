#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bident/corpus.hpp"
#include "bident/decision.hpp"
#include "bident/scoring.hpp"

namespace bident {

enum class Verdict { kept, removed };

struct CleaningRecord {
  std::string source_id;
  std::string s1;
  std::string s2;
  // Non-paraphrase probability in the reversed direction.
  double non_paraphrase_probability = 0.0;
  DecisionRule rule = DecisionRule::argmax();
  Verdict verdict = Verdict::kept;
  LabelDistribution distribution;
  // Present only when the forward direction was scored too.
  std::optional<LabelDistribution> forward_distribution;
};

nlohmann::ordered_json to_json(const CleaningRecord& record);

struct CleaningCounts {
  std::size_t input = 0;
  std::size_t paraphrase_gold = 0;
  std::size_t scored_pairs = 0;
  std::size_t removed = 0;
  std::size_t cleaned = 0;
};

nlohmann::ordered_json to_json(const CleaningCounts& counts);

struct CleaningOptions {
  ScoreOptions scoring;
  // Also score (s1, s2) and remove when either direction is non-paraphrase.
  bool both_directions = false;
};

struct CleaningResult {
  std::vector<Record> cleaned;
  std::vector<CleaningRecord> removed;
  CleaningCounts counts;
};

// Scores gold paraphrases in the reversed direction and removes those the
// paraphrase model calls non-paraphrase under `rule`. Gold non-paraphrases pass
// through unscored. Both outputs keep input order.
CleaningResult clean(const DatasetSplit& split, Scorer& scorer, const DecisionRule& rule,
                     const CleaningOptions& options = {});

}  // namespace bident
