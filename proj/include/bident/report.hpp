#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bident/decision.hpp"

namespace bident {

enum class TableKind { extraction, cleaning };

std::string_view to_string(TableKind kind);
TableKind parse_table_kind(std::string_view text);

// What one run manifest contributes to a report row.
struct ReportEntry {
  TableKind kind = TableKind::extraction;
  std::string dataset;
  std::string model;
  DecisionRule rule = DecisionRule::argmax();
  std::optional<std::size_t> count;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> hand_precision;
};

// Reads an extract, clean or evaluate manifest. Throws ConfigError for other
// modes or missing keys.
ReportEntry report_entry_from_manifest(const nlohmann::json& manifest);

struct ReportRow {
  DecisionRule rule = DecisionRule::argmax();
  std::optional<std::size_t> count;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> hand_precision;
};

struct ReportTable {
  TableKind kind = TableKind::extraction;
  std::string dataset;
  std::string model;
  // argmax first, then thresholds ascending.
  std::vector<ReportRow> rows;
};

struct Report {
  std::vector<ReportTable> tables;
};

// Groups entries into one table per (kind, dataset, model) and one row per rule.
// Entries for the same row are merged; conflicting values raise ConfigError.
Report render_report(std::span<const ReportEntry> entries);

// Aligned text tables; undefined or missing values print as an em dash.
std::string to_text(const Report& report);
// {"tables": [{kind, dataset, model, rows: [{rule, count, precision, recall, hand_precision?}]}]}
nlohmann::ordered_json to_json(const Report& report);

}  // namespace bident
