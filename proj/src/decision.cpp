#include "bident/decision.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

#include "bident/error.hpp"

namespace bident {

DecisionRule DecisionRule::parse(std::string_view text) {
  if (text == "argmax") return argmax();
  if (text.substr(0, 2) == "t:") {
    auto digits = text.substr(2);
    double t = 0.0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), t);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && std::isfinite(t)) return threshold(t);
  }
  throw ConfigError("bad decision rule '" + std::string(text) + "' (expected argmax or t:X)");
}

void DecisionRule::validate(Task task) const {
  if (kind_ == Kind::argmax) return;
  const double uniform = 1.0 / static_cast<double>(class_names(task).size());
  if (!(t_ > uniform && t_ <= 1.0)) {
    throw ConfigError("threshold " + to_string() + " must lie in (" + std::to_string(uniform) + ", 1] for " +
                      std::string(bident::to_string(task)));
  }
}

std::string DecisionRule::to_string() const {
  if (kind_ == Kind::argmax) return "argmax";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), t_);
  return "t:" + std::string(buf, ptr);
}

bool decide(const LabelDistribution& dist, const DecisionRule& rule, std::string_view positive_class) {
  const double p = dist.at(positive_class);
  if (rule.kind() == DecisionRule::Kind::threshold) return p >= rule.t();
  for (const auto& [cls, q] : dist.entries()) {
    if (cls != positive_class && q >= p) return false;
  }
  return true;
}

}  // namespace bident
