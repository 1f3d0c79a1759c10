#include "bident/labels.hpp"

#include <array>
#include <cmath>
#include <string>

#include "bident/error.hpp"

namespace bident {

namespace {

constexpr std::array<std::string_view, 3> kNliClasses{kEntailment, kNeutral, kContradiction};
constexpr std::array<std::string_view, 2> kParaClasses{kParaphrase, kNonParaphrase};

}  // namespace

std::string_view to_string(Task task) {
  return task == Task::nli_3way ? "nli-3way" : "paraphrase-2way";
}

Task parse_task(std::string_view name) {
  if (name == "nli-3way") return Task::nli_3way;
  if (name == "paraphrase-2way") return Task::paraphrase_2way;
  throw ConfigError("unknown task '" + std::string(name) + "' (expected nli-3way or paraphrase-2way)");
}

std::span<const std::string_view> class_names(Task task) {
  if (task == Task::nli_3way) return kNliClasses;
  return kParaClasses;
}

std::optional<Task> task_of_label(std::string_view label) {
  for (auto c : kNliClasses) {
    if (c == label) return Task::nli_3way;
  }
  for (auto c : kParaClasses) {
    if (c == label) return Task::paraphrase_2way;
  }
  return std::nullopt;
}

std::optional<double> LabelDistribution::probability(std::string_view cls) const {
  for (const auto& [name, p] : entries_) {
    if (name == cls) return p;
  }
  return std::nullopt;
}

double LabelDistribution::at(std::string_view cls) const {
  if (auto p = probability(cls)) return *p;
  throw ConfigError("class '" + std::string(cls) + "' is not in the distribution");
}

const std::string& LabelDistribution::argmax_class() const {
  if (entries_.empty()) throw ConfigError("argmax of an empty distribution");
  const auto* best = &entries_.front();
  for (const auto& e : entries_) {
    if (e.second > best->second) best = &e;
  }
  return best->first;
}

double LabelDistribution::sum() const {
  double total = 0.0;
  for (const auto& e : entries_) total += e.second;
  return total;
}

LabelDistribution validate_distribution(const LabelDistribution& dist, Task task,
                                        const DistributionCheck& check) {
  using Kind = ScoringError::Kind;
  const auto names = class_names(task);
  if (dist.size() != names.size()) {
    throw ScoringError(Kind::invalid_distribution,
                       "distribution has " + std::to_string(dist.size()) + " classes, task " +
                           std::string(to_string(task)) + " expects " + std::to_string(names.size()));
  }

  std::vector<std::pair<std::string, double>> ordered;
  ordered.reserve(names.size());
  for (auto name : names) {
    auto p = dist.probability(name);
    if (!p) {
      throw ScoringError(Kind::invalid_distribution,
                         "distribution is missing class '" + std::string(name) + "'");
    }
    if (!(*p >= 0.0 && *p <= 1.0)) {
      throw ScoringError(Kind::invalid_distribution,
                         "probability for '" + std::string(name) + "' outside [0,1]: " + std::to_string(*p));
    }
    ordered.emplace_back(std::string(name), *p);
  }

  LabelDistribution result(std::move(ordered));
  const double total = result.sum();
  if (std::fabs(total - 1.0) > check.tolerance) {
    if (!check.renormalize || total <= 0.0) {
      throw ScoringError(Kind::invalid_distribution,
                         "probabilities sum to " + std::to_string(total) + ", not 1 (broken model export?)");
    }
    auto entries = result.entries();
    for (auto& e : entries) e.second /= total;
    result = LabelDistribution(std::move(entries));
  }
  return result;
}

}  // namespace bident
