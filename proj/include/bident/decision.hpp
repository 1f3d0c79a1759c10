#pragma once

#include <string>
#include <string_view>

#include "bident/labels.hpp"

namespace bident {

// How a predicted distribution becomes a yes/no verdict for a positive class.
class DecisionRule {
 public:
  enum class Kind { argmax, threshold };

  static DecisionRule argmax() { return DecisionRule(Kind::argmax, 0.0); }
  static DecisionRule threshold(double t) { return DecisionRule(Kind::threshold, t); }
  // "argmax" or "t:X".
  static DecisionRule parse(std::string_view text);

  Kind kind() const { return kind_; }
  double t() const { return t_; }
  bool is_argmax() const { return kind_ == Kind::argmax; }

  // Throws ConfigError unless t lies in (1/classes, 1] for the task.
  void validate(Task task) const;

  // Canonical text form; parse(to_string()) round-trips.
  std::string to_string() const;

  bool operator==(const DecisionRule&) const = default;

 private:
  DecisionRule(Kind kind, double t) : kind_(kind), t_(t) {}

  Kind kind_;
  double t_;
};

// argmax: the positive class is strictly the most probable (ties are negative).
// threshold: p(positive) >= t.
bool decide(const LabelDistribution& dist, const DecisionRule& rule, std::string_view positive_class);

}  // namespace bident
