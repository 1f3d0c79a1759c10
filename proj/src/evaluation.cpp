#include "bident/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "bident/error.hpp"
#include "bident/rng.hpp"
#include "bident/text.hpp"

namespace bident {

ConfusionCounts confusion(std::span<const std::string> gold, std::span<const std::string> predicted,
                          std::string_view positive_class) {
  if (gold.size() != predicted.size()) {
    throw ConfigError("gold and predicted label lists differ in length (" + std::to_string(gold.size()) + " vs " +
                      std::to_string(predicted.size()) + ")");
  }
  if (gold.empty()) throw ConfigError("confusion counts need at least one instance");
  ConfusionCounts c;
  c.positive_class = std::string(positive_class);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool g = gold[i] == positive_class;
    const bool p = predicted[i] == positive_class;
    if (g && p) ++c.tp;
    else if (!g && p) ++c.fp;
    else if (g && !p) ++c.fn;
    else ++c.tn;
  }
  return c;
}

EvalMetrics metrics(const ConfusionCounts& c) {
  EvalMetrics m;
  m.positive_class = c.positive_class;
  if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return m;
}

namespace {

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json to_json(const ConfusionCounts& c, const EvalMetrics& m) {
  return {{"positive_class", c.positive_class},
          {"tp", c.tp},
          {"fp", c.fp},
          {"fn", c.fn},
          {"tn", c.tn},
          {"precision", optional_number(m.precision)},
          {"recall", optional_number(m.recall)}};
}

ConfusionMatrix confusion_matrix(std::span<const std::string> gold, std::span<const std::string> predicted,
                                 std::span<const std::string_view> classes) {
  if (gold.size() != predicted.size()) throw ConfigError("gold and predicted label lists differ in length");
  ConfusionMatrix m;
  m.classes.assign(classes.begin(), classes.end());
  m.counts.assign(classes.size(), std::vector<std::uint64_t>(classes.size(), 0));
  auto index = [&](const std::string& label) {
    auto it = std::find(m.classes.begin(), m.classes.end(), label);
    if (it == m.classes.end()) throw ConfigError("label '" + label + "' is not a known class");
    return static_cast<std::size_t>(it - m.classes.begin());
  };
  for (std::size_t i = 0; i < gold.size(); ++i) ++m.counts[index(gold[i])][index(predicted[i])];
  return m;
}

nlohmann::ordered_json to_json(const ConfusionMatrix& m) {
  return {{"classes", m.classes}, {"counts", m.counts}};
}

// ---------------------------------------------------------------------------

AnnotationSheet sample_for_validation(std::span<const ExtractionRecord> records, std::size_t n,
                                      std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t k = std::min(n, records.size());
  AnnotationSheet sheet;
  for (auto i : sample_indices(records.size(), k, rng)) {
    const auto& r = records[i];
    sheet.rows.push_back({r.source_id, r.s1, r.s2, ""});
  }
  return sheet;
}

namespace {

std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out.push_back(s[i]);
      continue;
    }
    switch (s[++i]) {
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      case '\\': out.push_back('\\'); break;
      default:
        out.push_back('\\');
        out.push_back(s[i]);
    }
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

void write_tsv(std::ostream& out, const AnnotationSheet& sheet) {
  out << "source_id\ts1\ts2\tverdict\n";
  for (const auto& row : sheet.rows) {
    out << escape_field(row.source_id) << '\t' << escape_field(row.s1) << '\t' << escape_field(row.s2) << '\t'
        << escape_field(row.verdict) << '\n';
  }
}

AnnotationSheet read_tsv(std::istream& in) {
  AnnotationSheet sheet;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_number == 1) {
      if (line.rfind("source_id\t", 0) != 0) throw DataError("annotation sheet lacks its header", 1);
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      auto tab = line.find('\t', start);
      fields.push_back(unescape_field(std::string_view(line).substr(start, tab == std::string::npos ? tab : tab - start)));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    // Spreadsheets may drop the trailing empty verdict column.
    if (fields.size() == 3) fields.emplace_back();
    if (fields.size() != 4) {
      throw DataError("annotation row has " + std::to_string(fields.size()) + " fields, expected 4", line_number);
    }
    sheet.rows.push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  return sheet;
}

double hand_precision(const AnnotationSheet& sheet) {
  if (sheet.rows.empty()) throw DataError("annotation sheet has no rows");
  std::size_t yes = 0;
  for (std::size_t i = 0; i < sheet.rows.size(); ++i) {
    const auto verdict = lower(text::trim(sheet.rows[i].verdict));
    if (verdict == "yes") {
      ++yes;
    } else if (verdict != "no") {
      throw DataError("row " + std::to_string(i + 1) + " (" + sheet.rows[i].source_id + ") has verdict '" +
                      sheet.rows[i].verdict + "', expected yes or no");
    }
  }
  return static_cast<double>(yes) / static_cast<double>(sheet.rows.size());
}

// ---------------------------------------------------------------------------

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t substitution = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({above + 1, row[j - 1] + 1, substitution});
      diagonal = above;
    }
  }
  return row[b.size()];
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(text::code_points(a), text::code_points(b));
}

double normalized_edit_distance(std::string_view a, std::string_view b) {
  const auto ca = text::code_points(a);
  const auto cb = text::code_points(b);
  const std::size_t longest = std::max(ca.size(), cb.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(levenshtein(ca, cb)) / static_cast<double>(longest);
}

double token_length_ratio(std::string_view a, std::string_view b) {
  const auto na = text::whitespace_tokens(a).size();
  const auto nb = text::whitespace_tokens(b).size();
  const auto hi = std::max(na, nb);
  if (hi == 0) return 1.0;
  return static_cast<double>(std::min(na, nb)) / static_cast<double>(hi);
}

std::optional<Summary> summarize(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return values[lo] + (values[hi] - values[lo]) * (pos - static_cast<double>(lo));
  };
  Summary s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.median = quantile(0.5);
  s.q1 = quantile(0.25);
  s.q3 = quantile(0.75);
  s.min = values.front();
  s.max = values.back();
  return s;
}

SimilarityStats similarity_stats(std::span<const ExtractionRecord> records) {
  std::vector<double> distances, ratios;
  distances.reserve(records.size());
  ratios.reserve(records.size());
  for (const auto& r : records) {
    distances.push_back(normalized_edit_distance(r.s1, r.s2));
    ratios.push_back(token_length_ratio(r.s1, r.s2));
  }
  return {records.size(), summarize(std::move(distances)), summarize(std::move(ratios))};
}

namespace {

nlohmann::ordered_json summary_json(const std::optional<Summary>& s) {
  if (!s) return nullptr;
  return {{"mean", s->mean}, {"median", s->median}, {"q1", s->q1},
          {"q3", s->q3},     {"min", s->min},       {"max", s->max}};
}

}  // namespace

nlohmann::ordered_json to_json(const SimilarityStats& stats) {
  return {{"count", stats.count},
          {"edit_distance", {{"definition", "levenshtein over code points / longer length"},
                             {"summary", summary_json(stats.edit_distance)}}},
          {"length_ratio", {{"definition", "min/max whitespace token count"},
                            {"summary", summary_json(stats.length_ratio)}}}};
}

// ---------------------------------------------------------------------------

OverlapReport overlap(const std::map<std::string, std::vector<ExtractionRecord>>& runs,
                      const std::map<std::string, std::string>* pivot_text) {
  OverlapReport report;
  std::map<std::string, std::size_t> membership;
  for (const auto& [language, records] : runs) {
    report.languages.push_back(language);
    std::set<std::string> seen;
    for (const auto& r : records) {
      if (!seen.insert(r.source_id).second) {
        throw DataError("source id '" + r.source_id + "' appears twice in the " + language + " run");
      }
      ++membership[r.source_id];
    }
  }

  const std::size_t languages = runs.size();
  report.unique_count = membership.size();
  report.exactly.assign(languages, 0);
  for (const auto& [id, count] : membership) ++report.exactly[count - 1];
  report.at_least.assign(languages, 0);
  std::size_t running = 0;
  for (std::size_t k = languages; k-- > 0;) {
    running += report.exactly[k];
    report.at_least[k] = running;
  }

  if (pivot_text) {
    std::set<std::string> texts;
    for (const auto& [id, count] : membership) {
      auto it = pivot_text->find(id);
      texts.insert(it == pivot_text->end() ? "\x1f" + id : it->second);
    }
    report.unique_pivot_count = texts.size();
  }
  return report;
}

nlohmann::ordered_json to_json(const OverlapReport& r) {
  nlohmann::ordered_json at_least = nlohmann::ordered_json::object();
  nlohmann::ordered_json exactly = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < r.at_least.size(); ++k) {
    at_least[std::to_string(k + 1)] = r.at_least[k];
    exactly[std::to_string(k + 1)] = r.exactly[k];
  }
  nlohmann::ordered_json j{{"languages", r.languages},
                           {"identity", "source_id"},
                           {"unique_count", r.unique_count},
                           {"at_least", at_least},
                           {"exactly", exactly}};
  if (r.unique_pivot_count) j["unique_pivot_count"] = *r.unique_pivot_count;
  return j;
}

}  // namespace bident
