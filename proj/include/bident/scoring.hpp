#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bident/labels.hpp"

namespace bident {

enum class Backend { local_model, remote, static_oracle };

std::string_view to_string(Backend backend);

struct ScorerDescriptor {
  Task task = Task::nli_3way;
  Backend backend = Backend::static_oracle;
  std::string model_id;
  // 0 when the backend does not tokenize locally.
  std::size_t max_sequence_length = 0;
};

nlohmann::ordered_json to_json(const ScorerDescriptor& descriptor);

// A backend producing class distributions for sequence pairs. Implementations
// must tolerate concurrent score_chunk calls.
class Scorer {
 public:
  explicit Scorer(ScorerDescriptor descriptor) : descriptor_(std::move(descriptor)) {}
  virtual ~Scorer() = default;

  Scorer(const Scorer&) = delete;
  Scorer& operator=(const Scorer&) = delete;

  const ScorerDescriptor& descriptor() const { return descriptor_; }
  Task task() const { return descriptor_.task; }

  // Scores one backend batch; the result is index-aligned with `pairs`.
  // Prefer score_batch, which validates, counts and shards.
  std::vector<LabelDistribution> score_chunk(std::span<const SequencePair> pairs);

  // Pairs handed to the backend so far.
  std::size_t pairs_scored() const { return pairs_scored_.load(); }
  virtual std::size_t truncation_count() const { return 0; }

 protected:
  virtual std::vector<LabelDistribution> do_score(std::span<const SequencePair> pairs) = 0;

 private:
  ScorerDescriptor descriptor_;
  std::atomic<std::size_t> pairs_scored_{0};
};

struct ScoreOptions {
  std::size_t batch_size = 32;
  std::size_t workers = 1;
  DistributionCheck check;
};

// Scores every pair, in batches spread over `workers` threads. The output is
// index-aligned with the input and independent of batch size and worker count.
// Each distribution is validated against the scorer's task; a failure raises
// ScoringError carrying the first index without a result.
std::vector<LabelDistribution> score_batch(Scorer& scorer, std::span<const SequencePair> pairs,
                                           const ScoreOptions& options = {});

// score_batch on the swapped pairs (s2, s1).
std::vector<LabelDistribution> score_reversed(Scorer& scorer, std::span<const SequencePair> pairs,
                                              const ScoreOptions& options = {});

// ---------------------------------------------------------------------------
// Static oracle

struct OracleEntry {
  SequencePair pair;
  LabelDistribution distribution;
};

class StaticOracle final : public Scorer {
 public:
  // Lookup table; a pair missing from the table is a scoring error.
  static std::unique_ptr<StaticOracle> from_entries(std::vector<OracleEntry> entries, Task task,
                                                    std::string model_id = "oracle:table");
  // JSONL of {s1, s2, distribution: {class: probability}}.
  static std::unique_ptr<StaticOracle> from_table(const std::filesystem::path& path, Task task);

  // Positive class (entailment / paraphrase) at 0.9 iff the whitespace tokens of
  // s2 form a subsequence of those of s1; otherwise neutral / non-paraphrase at 0.9.
  static std::unique_ptr<StaticOracle> subsequence(Task task);

  std::size_t table_size() const;

 protected:
  std::vector<LabelDistribution> do_score(std::span<const SequencePair> pairs) override;

 private:
  struct Table;
  StaticOracle(ScorerDescriptor descriptor, std::shared_ptr<const Table> table);

  std::shared_ptr<const Table> table_;
};

bool is_token_subsequence(std::string_view needle, std::string_view haystack);

// ---------------------------------------------------------------------------
// Remote inference service

struct RemoteOptions {
  std::string url;
  Task task = Task::nli_3way;
  std::string model_id;
  std::optional<std::string> bearer_token;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds read_timeout{30000};
};

// POST {base}/score with {"pairs": [{"s1", "s2"}], "task"}; expects
// {"distributions": [{class: probability}]}. Transport failures, 5xx and 429
// are retried with exponential backoff up to max_attempts.
class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(RemoteOptions options);

  std::size_t requests_sent() const { return requests_.load(); }

 protected:
  std::vector<LabelDistribution> do_score(std::span<const SequencePair> pairs) override;

 private:
  RemoteOptions options_;
  std::string scheme_host_port_;
  std::string path_;
  std::atomic<std::size_t> requests_{0};
};

// ---------------------------------------------------------------------------
// Local exported model

struct ModelSidecar {
  Task task = Task::nli_3way;
  std::vector<std::string> class_names;
  std::string tokenizer_id;
  std::size_t max_sequence_length = 0;
  std::string model_id;
};

ModelSidecar load_sidecar(const std::filesystem::path& path);
ModelSidecar parse_sidecar(const nlohmann::json& j);
// model.onnx -> model.json
std::filesystem::path sidecar_path_for(const std::filesystem::path& model_path);

class LocalModelScorer final : public Scorer {
 public:
  // Loads `model_path` and its sidecar. Throws ScoringError(model_load).
  explicit LocalModelScorer(const std::filesystem::path& model_path);
  ~LocalModelScorer() override;

  std::size_t truncation_count() const override { return truncations_.load(); }
  const ModelSidecar& sidecar() const;

  struct State;

 protected:
  std::vector<LabelDistribution> do_score(std::span<const SequencePair> pairs) override;

 private:
  LocalModelScorer(const std::filesystem::path& model_path, ModelSidecar sidecar);

  std::unique_ptr<State> state_;
  std::atomic<std::size_t> truncations_{0};
};

}  // namespace bident
