#pragma once

// Reference implementations written for clarity, not speed. Tests compare the
// library against these.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace oracle {

// Textbook recursion with no memo; exponential, so keep inputs short.
inline std::size_t naive_levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::size_t cost = a.back() == b.back() ? 0 : 1;
  auto a1 = a.substr(0, a.size() - 1);
  auto b1 = b.substr(0, b.size() - 1);
  return std::min({naive_levenshtein(a1, b) + 1, naive_levenshtein(a, b1) + 1, naive_levenshtein(a1, b1) + cost});
}

// Same recursion with a memo table, for lengths the naive form cannot reach.
inline std::size_t memo_levenshtein(std::u32string_view a, std::u32string_view b) {
  std::vector<std::vector<long>> memo(a.size() + 1, std::vector<long>(b.size() + 1, -1));
  auto go = [&](auto&& self, std::size_t i, std::size_t j) -> long {
    if (i == 0) return static_cast<long>(j);
    if (j == 0) return static_cast<long>(i);
    long& m = memo[i][j];
    if (m >= 0) return m;
    const long cost = a[i - 1] == b[j - 1] ? 0 : 1;
    m = std::min({self(self, i - 1, j) + 1, self(self, i, j - 1) + 1, self(self, i - 1, j - 1) + cost});
    return m;
  };
  return static_cast<std::size_t>(go(go, a.size(), b.size()));
}

struct BruteMetrics {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  std::optional<double> precision, recall;
};

// Per-instance tally, then the ratio definitions.
inline BruteMetrics brute_force_metrics(const std::vector<std::string>& gold, const std::vector<std::string>& pred,
                                        const std::string& positive) {
  BruteMetrics m;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool g = gold[i] == positive;
    const bool p = pred[i] == positive;
    m.tp += g && p;
    m.fp += !g && p;
    m.fn += g && !p;
    m.tn += !g && !p;
  }
  long predicted_positive = 0, actual_positive = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    predicted_positive += pred[i] == positive;
    actual_positive += gold[i] == positive;
  }
  if (predicted_positive > 0) m.precision = double(m.tp) / double(predicted_positive);
  if (actual_positive > 0) m.recall = double(m.tp) / double(actual_positive);
  return m;
}

// All strings over `alphabet` with length <= max_len, shortest first.
inline std::vector<std::u32string> all_strings(std::u32string_view alphabet, std::size_t max_len) {
  std::vector<std::u32string> out{U""};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (char32_t c : alphabet) out.push_back(out[i] + c);
    }
    begin = end;
  }
  return out;
}

}  // namespace oracle
