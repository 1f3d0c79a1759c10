#include "bident/scoring.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "bident/error.hpp"
#include "bident/text.hpp"

namespace bident {

std::string_view to_string(Backend backend) {
  switch (backend) {
    case Backend::local_model: return "local-model";
    case Backend::remote: return "remote";
    case Backend::static_oracle: return "static-oracle";
  }
  return "?";
}

nlohmann::ordered_json to_json(const ScorerDescriptor& d) {
  nlohmann::ordered_json j;
  j["task"] = to_string(d.task);
  j["backend"] = to_string(d.backend);
  j["model_id"] = d.model_id;
  j["max_sequence_length"] = d.max_sequence_length;
  return j;
}

std::vector<LabelDistribution> Scorer::score_chunk(std::span<const SequencePair> pairs) {
  pairs_scored_.fetch_add(pairs.size());
  return do_score(pairs);
}

namespace {

// Scores pairs[offset, offset + count) and validates the result.
std::vector<LabelDistribution> score_one_batch(Scorer& scorer, std::span<const SequencePair> pairs,
                                               std::size_t offset, const DistributionCheck& check) {
  std::vector<LabelDistribution> raw;
  try {
    raw = scorer.score_chunk(pairs);
  } catch (const ScoringError& e) {
    throw e.with_offset(offset);
  } catch (const std::exception& e) {
    throw ScoringError(ScoringError::Kind::backend_unavailable, e.what(), offset);
  }
  if (raw.size() != pairs.size()) {
    throw ScoringError(ScoringError::Kind::protocol,
                       "backend returned " + std::to_string(raw.size()) + " distributions for " +
                           std::to_string(pairs.size()) + " pairs",
                       offset);
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    try {
      raw[i] = validate_distribution(raw[i], scorer.task(), check);
    } catch (const ScoringError& e) {
      throw ScoringError(e.kind(), "pair " + std::to_string(offset + i) + ": " + e.what(), offset + i);
    }
  }
  return raw;
}

}  // namespace

std::vector<LabelDistribution> score_batch(Scorer& scorer, std::span<const SequencePair> pairs,
                                           const ScoreOptions& options) {
  if (options.batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (options.workers == 0) throw ConfigError("worker count must be at least 1");

  std::vector<LabelDistribution> results(pairs.size());
  const std::size_t batches = (pairs.size() + options.batch_size - 1) / options.batch_size;
  auto run_batch = [&](std::size_t b) {
    const std::size_t offset = b * options.batch_size;
    const std::size_t count = std::min(options.batch_size, pairs.size() - offset);
    auto scored = score_one_batch(scorer, pairs.subspan(offset, count), offset, options.check);
    std::move(scored.begin(), scored.end(), results.begin() + static_cast<std::ptrdiff_t>(offset));
  };

  const std::size_t workers = std::min(options.workers, batches);
  if (workers <= 1) {
    for (std::size_t b = 0; b < batches; ++b) run_batch(b);
    return results;
  }

  // Batches are claimed in increasing order, so every batch below a failed one
  // was claimed before it and runs to completion.
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex error_mutex;
  std::size_t failed_batch = batches;
  std::exception_ptr failure;
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        while (!stop.load()) {
          const std::size_t b = next.fetch_add(1);
          if (b >= batches) return;
          try {
            run_batch(b);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (b < failed_batch) {
              failed_batch = b;
              failure = std::current_exception();
            }
            stop.store(true);
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

std::vector<LabelDistribution> score_reversed(Scorer& scorer, std::span<const SequencePair> pairs,
                                              const ScoreOptions& options) {
  std::vector<SequencePair> swapped;
  swapped.reserve(pairs.size());
  for (const auto& p : pairs) swapped.push_back(p.swapped());
  return score_batch(scorer, swapped, options);
}

// ---------------------------------------------------------------------------
// Static oracle

bool is_token_subsequence(std::string_view needle, std::string_view haystack) {
  auto n = text::whitespace_tokens(needle);
  auto h = text::whitespace_tokens(haystack);
  std::size_t i = 0;
  for (std::size_t j = 0; j < h.size() && i < n.size(); ++j) {
    if (n[i] == h[j]) ++i;
  }
  return i == n.size();
}

struct StaticOracle::Table {
  bool subsequence_mode = false;
  std::map<std::pair<std::string, std::string>, LabelDistribution> entries;
};

StaticOracle::StaticOracle(ScorerDescriptor descriptor, std::shared_ptr<const Table> table)
    : Scorer(std::move(descriptor)), table_(std::move(table)) {}

std::unique_ptr<StaticOracle> StaticOracle::from_entries(std::vector<OracleEntry> entries, Task task,
                                                         std::string model_id) {
  auto table = std::make_shared<Table>();
  for (auto& e : entries) {
    auto key = std::make_pair(text::nfc(e.pair.s1), text::nfc(e.pair.s2));
    if (!table->entries.emplace(key, std::move(e.distribution)).second) {
      throw DataError("oracle table lists the pair (" + key.first + ", " + key.second + ") twice");
    }
  }
  ScorerDescriptor d{task, Backend::static_oracle, std::move(model_id), 0};
  return std::unique_ptr<StaticOracle>(new StaticOracle(std::move(d), std::move(table)));
}

std::unique_ptr<StaticOracle> StaticOracle::from_table(const std::filesystem::path& path, Task task) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open oracle table " + path.string());
  std::vector<OracleEntry> entries;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (text::is_blank(line)) continue;
    try {
      auto row = nlohmann::ordered_json::parse(line);
      OracleEntry entry;
      entry.pair = {row.at("s1").get<std::string>(), row.at("s2").get<std::string>()};
      std::vector<std::pair<std::string, double>> probs;
      for (const auto& [cls, p] : row.at("distribution").items()) {
        const auto names = class_names(task);
        if (std::find(names.begin(), names.end(), cls) == names.end()) {
          throw ConfigError("oracle table " + path.string() + " has class '" + cls + "', which is not a " +
                            std::string(to_string(task)) + " class");
        }
        probs.emplace_back(cls, p.get<double>());
      }
      entry.distribution = LabelDistribution(std::move(probs));
      entries.push_back(std::move(entry));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ": bad oracle row: " + e.what(), line_number);
    }
  }
  return from_entries(std::move(entries), task, "oracle:table:" + text::stem(path.string()));
}

std::unique_ptr<StaticOracle> StaticOracle::subsequence(Task task) {
  auto table = std::make_shared<Table>();
  table->subsequence_mode = true;
  ScorerDescriptor d{task, Backend::static_oracle, "oracle:subseq", 0};
  return std::unique_ptr<StaticOracle>(new StaticOracle(std::move(d), std::move(table)));
}

std::size_t StaticOracle::table_size() const { return table_->entries.size(); }

std::vector<LabelDistribution> StaticOracle::do_score(std::span<const SequencePair> pairs) {
  std::vector<LabelDistribution> out;
  out.reserve(pairs.size());
  const bool nli = task() == Task::nli_3way;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (table_->subsequence_mode) {
      const bool holds = is_token_subsequence(p.s2, p.s1);
      if (nli) {
        out.emplace_back(std::vector<std::pair<std::string, double>>{
            {std::string(kEntailment), holds ? 0.9 : 0.05},
            {std::string(kNeutral), holds ? 0.05 : 0.9},
            {std::string(kContradiction), 0.05}});
      } else {
        out.emplace_back(std::vector<std::pair<std::string, double>>{
            {std::string(kParaphrase), holds ? 0.9 : 0.1}, {std::string(kNonParaphrase), holds ? 0.1 : 0.9}});
      }
      continue;
    }
    auto it = table_->entries.find({text::nfc(p.s1), text::nfc(p.s2)});
    if (it == table_->entries.end()) {
      throw ScoringError(ScoringError::Kind::unknown_pair,
                         "oracle table has no entry for (" + p.s1 + ", " + p.s2 + ")", i);
    }
    out.push_back(it->second);
  }
  return out;
}

}  // namespace bident
