#include "bident/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <tuple>

#include "bident/error.hpp"

namespace bident {

std::string_view to_string(TableKind kind) {
  return kind == TableKind::extraction ? "extraction" : "cleaning";
}

TableKind parse_table_kind(std::string_view text) {
  if (text == "extraction") return TableKind::extraction;
  if (text == "cleaning") return TableKind::cleaning;
  throw ConfigError("unknown table kind '" + std::string(text) + "'");
}

namespace {

const nlohmann::json& require(const nlohmann::json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(std::string("manifest lacks '") + where + key + "'");
  }
  return j.at(key);
}

std::optional<double> optional_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_number()) throw ConfigError(std::string("manifest field '") + key + "' is not a number");
  return j.at(key).get<double>();
}

}  // namespace

ReportEntry report_entry_from_manifest(const nlohmann::json& manifest) {
  ReportEntry e;
  const auto mode = require(manifest, "mode", "").get<std::string>();
  e.kind = parse_table_kind(require(manifest, "table", "").get<std::string>());
  e.dataset = require(require(manifest, "dataset", ""), "name", "dataset.").get<std::string>();
  e.model = require(require(manifest, "scorer", ""), "model_id", "scorer.").get<std::string>();
  e.rule = DecisionRule::parse(require(manifest, "rule", "").get<std::string>());

  if (mode == "extract") {
    e.count = require(require(manifest, "counts", ""), "extracted", "counts.").get<std::size_t>();
  } else if (mode == "clean") {
    e.count = require(require(manifest, "counts", ""), "removed", "counts.").get<std::size_t>();
  } else if (mode == "evaluate") {
    const auto analysis = require(manifest, "analysis", "").get<std::string>();
    if (analysis == "model") {
      const auto& m = require(manifest, "metrics", "");
      e.precision = optional_number(m, "precision");
      e.recall = optional_number(m, "recall");
    } else if (analysis == "hand") {
      e.hand_precision = optional_number(manifest, "hand_precision");
    } else {
      throw ConfigError("a " + analysis + " evaluation cannot feed a report");
    }
  } else {
    throw ConfigError("a " + mode + " manifest cannot feed a report");
  }
  return e;
}

namespace {

template <typename T>
void merge_field(std::optional<T>& into, const std::optional<T>& from, const char* name, const ReportEntry& e) {
  if (!from) return;
  if (into && *into != *from) {
    throw ConfigError(std::string("conflicting ") + name + " for " + std::string(to_string(e.kind)) + " " +
                      e.dataset + " " + e.rule.to_string());
  }
  into = from;
}

bool rule_less(const DecisionRule& a, const DecisionRule& b) {
  if (a.is_argmax() != b.is_argmax()) return a.is_argmax();
  return a.t() < b.t();
}

std::string format_number(const std::optional<double>& v) {
  if (!v) return "—";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

// Display width, counting each UTF-8 code point as one column.
std::size_t width(const std::string& s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

nlohmann::ordered_json json_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

Report render_report(std::span<const ReportEntry> entries) {
  if (entries.empty()) throw ConfigError("a report needs at least one run manifest");

  using TableKey = std::tuple<TableKind, std::string, std::string>;
  std::vector<TableKey> order;
  std::map<TableKey, std::vector<ReportRow>> tables;
  for (const auto& e : entries) {
    TableKey key{e.kind, e.dataset, e.model};
    auto [it, inserted] = tables.try_emplace(key);
    if (inserted) order.push_back(key);
    auto& rows = it->second;
    auto row = std::find_if(rows.begin(), rows.end(), [&](const ReportRow& r) { return r.rule == e.rule; });
    if (row == rows.end()) {
      rows.push_back({e.rule, {}, {}, {}, {}});
      row = rows.end() - 1;
    }
    merge_field(row->count, e.count, "counts", e);
    merge_field(row->precision, e.precision, "precision", e);
    merge_field(row->recall, e.recall, "recall", e);
    merge_field(row->hand_precision, e.hand_precision, "hand precision", e);
  }

  // Extraction tables before cleaning tables; otherwise first-seen order.
  std::stable_sort(order.begin(), order.end(),
                   [](const TableKey& a, const TableKey& b) { return std::get<0>(a) < std::get<0>(b); });
  Report report;
  for (const auto& key : order) {
    ReportTable table{std::get<0>(key), std::get<1>(key), std::get<2>(key), std::move(tables[key])};
    std::sort(table.rows.begin(), table.rows.end(),
              [](const ReportRow& a, const ReportRow& b) { return rule_less(a.rule, b.rule); });
    report.tables.push_back(std::move(table));
  }
  return report;
}

std::string to_text(const Report& report) {
  std::string out;
  for (std::size_t t = 0; t < report.tables.size(); ++t) {
    const auto& table = report.tables[t];
    const bool hand = std::any_of(table.rows.begin(), table.rows.end(),
                                  [](const ReportRow& r) { return r.hand_precision.has_value(); });
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"rule", "#", "P", "R"});
    if (hand) cells.back().push_back("✋P");
    for (const auto& row : table.rows) {
      cells.push_back({row.rule.to_string(), row.count ? std::to_string(*row.count) : "—",
                       format_number(row.precision), format_number(row.recall)});
      if (hand) cells.back().push_back(format_number(row.hand_precision));
    }
    std::vector<std::size_t> widths(cells.front().size(), 0);
    for (const auto& line : cells) {
      for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], width(line[c]));
    }

    if (t > 0) out += '\n';
    out += std::string(to_string(table.kind)) + ": " + table.dataset + " (" + table.model + ")\n";
    for (const auto& line : cells) {
      for (std::size_t c = 0; c < line.size(); ++c) {
        const std::string pad(widths[c] - width(line[c]), ' ');
        // Rule column left-aligned, numbers right-aligned.
        if (c == 0) out += line[c] + pad;
        else out += "  " + pad + line[c];
      }
      out += '\n';
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const Report& report) {
  nlohmann::ordered_json tables = nlohmann::ordered_json::array();
  for (const auto& table : report.tables) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
      nlohmann::ordered_json r{{"rule", row.rule.to_string()},
                               {"count", row.count ? nlohmann::ordered_json(*row.count) : nlohmann::ordered_json(nullptr)},
                               {"precision", json_number(row.precision)},
                               {"recall", json_number(row.recall)}};
      if (row.hand_precision) r["hand_precision"] = *row.hand_precision;
      rows.push_back(std::move(r));
    }
    tables.push_back({{"kind", to_string(table.kind)},
                      {"dataset", table.dataset},
                      {"model", table.model},
                      {"rows", std::move(rows)}});
  }
  return {{"tables", std::move(tables)}};
}

}  // namespace bident
