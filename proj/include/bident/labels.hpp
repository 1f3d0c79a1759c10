#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bident {

inline constexpr std::string_view kEntailment = "entailment";
inline constexpr std::string_view kNeutral = "neutral";
inline constexpr std::string_view kContradiction = "contradiction";
inline constexpr std::string_view kParaphrase = "paraphrase";
inline constexpr std::string_view kNonParaphrase = "non-paraphrase";

enum class Task { nli_3way, paraphrase_2way };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);

// Canonical class order for a task.
std::span<const std::string_view> class_names(Task task);

// The task whose class set contains `label`, if any.
std::optional<Task> task_of_label(std::string_view label);

struct SequencePair {
  std::string s1;
  std::string s2;

  SequencePair swapped() const { return {s2, s1}; }
  bool operator==(const SequencePair&) const = default;
};

// Probabilities keyed by class name, kept in the order they were given.
class LabelDistribution {
 public:
  LabelDistribution() = default;
  explicit LabelDistribution(std::vector<std::pair<std::string, double>> entries)
      : entries_(std::move(entries)) {}

  const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::optional<double> probability(std::string_view cls) const;
  // Throws ConfigError when `cls` is absent.
  double at(std::string_view cls) const;

  // First class with the highest probability.
  const std::string& argmax_class() const;
  double sum() const;

  bool operator==(const LabelDistribution&) const = default;

 private:
  std::vector<std::pair<std::string, double>> entries_;
};

struct DistributionCheck {
  double tolerance = 1e-4;
  bool renormalize = false;
};

// Validates `dist` against the task's class set and the sum-to-one tolerance and
// returns it in canonical class order. Throws ScoringError(invalid_distribution).
LabelDistribution validate_distribution(const LabelDistribution& dist, Task task,
                                        const DistributionCheck& check = {});

}  // namespace bident
