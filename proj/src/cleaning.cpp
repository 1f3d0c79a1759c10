#include "bident/cleaning.hpp"

#include "bident/error.hpp"

namespace bident {

namespace {

nlohmann::ordered_json distribution_json(const LabelDistribution& d) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [cls, p] : d.entries()) j[cls] = p;
  return j;
}

}  // namespace

nlohmann::ordered_json to_json(const CleaningRecord& r) {
  nlohmann::ordered_json j;
  j["source_id"] = r.source_id;
  j["s1"] = r.s1;
  j["s2"] = r.s2;
  j["non_paraphrase_probability"] = r.non_paraphrase_probability;
  j["rule"] = r.rule.to_string();
  j["verdict"] = r.verdict == Verdict::removed ? "removed" : "kept";
  j["distribution"] = distribution_json(r.distribution);
  if (r.forward_distribution) j["forward_distribution"] = distribution_json(*r.forward_distribution);
  return j;
}

nlohmann::ordered_json to_json(const CleaningCounts& c) {
  return {{"input", c.input},
          {"paraphrase_gold", c.paraphrase_gold},
          {"scored_pairs", c.scored_pairs},
          {"removed", c.removed},
          {"cleaned", c.cleaned}};
}

CleaningResult clean(const DatasetSplit& split, Scorer& scorer, const DecisionRule& rule,
                     const CleaningOptions& options) {
  if (scorer.task() != Task::paraphrase_2way) {
    throw ConfigError("cleaning needs a paraphrase-2way scorer, got " + std::string(to_string(scorer.task())));
  }
  rule.validate(Task::paraphrase_2way);
  auto task = split_task(split);
  if (task && *task != Task::paraphrase_2way) throw DataError("cleaning needs a paraphrase split, got NLI labels");

  CleaningResult result;
  result.counts.input = split.size();

  std::vector<std::size_t> scored_index;
  std::vector<SequencePair> pairs;
  for (std::size_t i = 0; i < split.records.size(); ++i) {
    if (split.records[i].label == kParaphrase) {
      scored_index.push_back(i);
      pairs.push_back(split.records[i].pair());
    }
  }
  result.counts.paraphrase_gold = pairs.size();

  std::vector<LabelDistribution> reversed, forward;
  if (!pairs.empty()) {
    reversed = score_reversed(scorer, pairs, options.scoring);
    result.counts.scored_pairs += reversed.size();
    if (options.both_directions) {
      forward = score_batch(scorer, pairs, options.scoring);
      result.counts.scored_pairs += forward.size();
    }
  }

  const std::string positive(kNonParaphrase);
  std::vector<bool> removed(split.records.size(), false);
  std::vector<CleaningRecord> removed_records;
  for (std::size_t k = 0; k < scored_index.size(); ++k) {
    bool remove = decide(reversed[k], rule, positive);
    if (options.both_directions) remove = remove || decide(forward[k], rule, positive);
    if (!remove) continue;
    const Record& source = split.records[scored_index[k]];
    CleaningRecord r;
    r.source_id = source.id;
    r.s1 = source.s1;
    r.s2 = source.s2;
    r.non_paraphrase_probability = reversed[k].at(positive);
    r.rule = rule;
    r.verdict = Verdict::removed;
    r.distribution = reversed[k];
    if (options.both_directions) r.forward_distribution = forward[k];
    removed[scored_index[k]] = true;
    result.removed.push_back(std::move(r));
  }

  for (std::size_t i = 0; i < split.records.size(); ++i) {
    if (!removed[i]) result.cleaned.push_back(split.records[i]);
  }
  result.counts.removed = result.removed.size();
  result.counts.cleaned = result.cleaned.size();
  return result;
}

}  // namespace bident
