#include "bident/extraction.hpp"

#include "bident/error.hpp"

namespace bident {

std::string_view to_string(Keep keep) { return keep == Keep::entailment ? "entailment" : "neutral"; }

Keep parse_keep(std::string_view text) {
  if (text == "entailment") return Keep::entailment;
  if (text == "neutral") return Keep::neutral;
  throw ConfigError("bad --keep value '" + std::string(text) + "' (expected entailment or neutral)");
}

nlohmann::ordered_json to_json(const ExtractionRecord& r) {
  nlohmann::ordered_json j;
  j["source_id"] = r.source_id;
  j["s1"] = r.s1;
  j["s2"] = r.s2;
  j["positive_probability"] = r.positive_probability;
  j["positive_class"] = r.positive_class;
  j["rule"] = r.rule.to_string();
  j["language"] = r.language;
  j["trivial"] = r.trivial;
  return j;
}

ExtractionRecord extraction_record_from_json(const nlohmann::json& j) {
  ExtractionRecord r;
  r.source_id = j.at("source_id").get<std::string>();
  r.s1 = j.at("s1").get<std::string>();
  r.s2 = j.at("s2").get<std::string>();
  r.positive_probability = j.value("positive_probability", 0.0);
  r.positive_class = j.value("positive_class", std::string(kEntailment));
  r.rule = DecisionRule::parse(j.value("rule", std::string("argmax")));
  r.language = j.value("language", std::string{});
  r.trivial = j.value("trivial", false);
  return r;
}

nlohmann::ordered_json to_json(const NegativeRecord& r) {
  nlohmann::ordered_json j;
  j["source_id"] = r.source_id;
  j["s1"] = r.s1;
  j["s2"] = r.s2;
  j["predicted_class"] = r.predicted_class;
  nlohmann::ordered_json dist = nlohmann::ordered_json::object();
  for (const auto& [cls, p] : r.distribution.entries()) dist[cls] = p;
  j["distribution"] = std::move(dist);
  j["language"] = r.language;
  return j;
}

nlohmann::ordered_json to_json(const ExtractionCounts& c) {
  return {{"input", c.input},         {"entailment_selected", c.entailment_selected},
          {"scored", c.scored},       {"extracted", c.extracted},
          {"trivial", c.trivial},     {"negatives", c.negatives}};
}

std::vector<Record> select_entailed(const DatasetSplit& split) {
  auto task = split_task(split);
  if (task && *task != Task::nli_3way) throw DataError("extraction needs an NLI split, got paraphrase labels");
  std::vector<Record> out;
  for (const auto& record : split.records) {
    if (record.label == kEntailment) out.push_back(record);
  }
  return out;
}

ExtractionResult extract(const DatasetSplit& split, Scorer& scorer, const DecisionRule& rule, Keep keep,
                         const ExtractionOptions& options) {
  if (scorer.task() != Task::nli_3way) {
    throw ConfigError("extraction needs an nli-3way scorer, got " + std::string(to_string(scorer.task())));
  }
  rule.validate(Task::nli_3way);
  if (keep == Keep::neutral && !rule.is_argmax()) {
    throw ConfigError("--keep neutral only supports the argmax rule");
  }

  ExtractionResult result;
  result.counts.input = split.size();
  const auto candidates = select_entailed(split);
  result.counts.entailment_selected = candidates.size();
  if (candidates.empty()) return result;

  std::vector<SequencePair> pairs;
  pairs.reserve(candidates.size());
  for (const auto& r : candidates) pairs.push_back(r.pair());
  const auto reversed = score_reversed(scorer, pairs, options.scoring);
  result.counts.scored = reversed.size();

  const std::string positive(to_string(keep));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Record& source = candidates[i];
    const LabelDistribution& dist = reversed[i];
    if (decide(dist, rule, positive)) {
      ExtractionRecord r;
      r.source_id = source.id;
      r.s1 = source.s2;
      r.s2 = source.s1;
      r.positive_probability = dist.at(positive);
      r.positive_class = positive;
      r.rule = rule;
      r.language = source.language;
      r.trivial = source.s1 == source.s2;
      if (r.trivial) ++result.counts.trivial;
      result.records.push_back(std::move(r));
    } else if (options.collect_negatives) {
      result.negatives.push_back(NegativeRecord{source.id, source.s2, source.s1, dist.argmax_class(), dist,
                                                source.language});
    }
  }
  result.counts.extracted = result.records.size();
  result.counts.negatives = result.negatives.size();
  return result;
}

}  // namespace bident
