#include <gtest/gtest.h>

#include <fstream>

#include "bident/error.hpp"
#include "bident/report.hpp"
#include "schema_check.hpp"

using namespace bident;

namespace {

ReportEntry extraction_entry(const std::string& rule, std::size_t count) {
  ReportEntry e;
  e.kind = TableKind::extraction;
  e.dataset = "snli";
  e.model = "nli-model";
  e.rule = DecisionRule::parse(rule);
  e.count = count;
  return e;
}

nlohmann::json report_schema() {
  std::ifstream in(std::string(BIDENT_SCHEMA_DIR) + "/report.schema.json");
  return nlohmann::json::parse(in);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t nl; (nl = text.find('\n', start)) != std::string::npos; start = nl + 1) {
    out.push_back(text.substr(start, nl - start));
  }
  return out;
}

}  // namespace

TEST(Report, ThreeRulesMakeThreeRowsInRuleOrder) {
  std::vector<ReportEntry> entries{extraction_entry("t:0.9", 2), extraction_entry("argmax", 5),
                                   extraction_entry("t:0.75", 3)};
  auto report = render_report(entries);
  ASSERT_EQ(report.tables.size(), 1u);
  const auto& rows = report.tables[0].rows;
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_TRUE(rows[0].rule.is_argmax());
  EXPECT_EQ(rows[1].rule.t(), 0.75);
  EXPECT_EQ(rows[2].rule.t(), 0.9);
  EXPECT_EQ(*rows[0].count, 5u);

  auto lines = lines_of(to_text(report));
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "extraction: snli (nli-model)");
  EXPECT_EQ(lines[1], "rule    #  P  R");
  EXPECT_EQ(lines[2], "argmax  5  —  —");
  EXPECT_EQ(lines[4], "t:0.9   2  —  —");

  auto json = to_json(report);
  EXPECT_TRUE(schema::validate(report_schema(), json).empty());
  EXPECT_TRUE(json["tables"][0]["rows"][0]["precision"].is_null());
  EXPECT_FALSE(json["tables"][0]["rows"][0].contains("hand_precision"));
}

TEST(Report, SingleRuleIsOneRow) {
  std::vector<ReportEntry> entries{extraction_entry("argmax", 7)};
  auto report = render_report(entries);
  EXPECT_EQ(report.tables.at(0).rows.size(), 1u);
  EXPECT_THROW(render_report(std::span<const ReportEntry>{}), ConfigError);
}

TEST(Report, MergesMetricsAndHandPrecisionIntoRows) {
  auto count = extraction_entry("argmax", 5);
  auto model = extraction_entry("argmax", 0);
  model.count.reset();
  model.precision = 2.0 / 3.0;
  model.recall = 0.5;
  auto hand = extraction_entry("argmax", 0);
  hand.count.reset();
  hand.hand_precision = 0.79;
  std::vector<ReportEntry> entries{count, model, hand};
  auto text = to_text(render_report(entries));
  EXPECT_NE(text.find("✋P"), std::string::npos);
  EXPECT_NE(text.find("argmax  5  0.667  0.500  0.790"), std::string::npos) << text;
  auto json = to_json(render_report(entries));
  EXPECT_EQ(json["tables"][0]["rows"][0]["hand_precision"], 0.79);
  EXPECT_TRUE(schema::validate(report_schema(), json).empty());
}

TEST(Report, ConflictingValuesRejected) {
  std::vector<ReportEntry> entries{extraction_entry("argmax", 5), extraction_entry("argmax", 6)};
  EXPECT_THROW(render_report(entries), ConfigError);
  std::vector<ReportEntry> same{extraction_entry("argmax", 5), extraction_entry("argmax", 5)};
  EXPECT_EQ(render_report(same).tables[0].rows.size(), 1u);
}

TEST(Report, SeparateTablesPerKindDatasetModel) {
  auto cleaning = extraction_entry("argmax", 2);
  cleaning.kind = TableKind::cleaning;
  cleaning.dataset = "mrpc";
  auto other_model = extraction_entry("argmax", 4);
  other_model.model = "other";
  std::vector<ReportEntry> entries{cleaning, extraction_entry("argmax", 5), other_model};
  auto report = render_report(entries);
  ASSERT_EQ(report.tables.size(), 3u);
  EXPECT_EQ(report.tables[0].kind, TableKind::extraction);
  EXPECT_EQ(report.tables[0].model, "nli-model");
  EXPECT_EQ(report.tables[1].model, "other");
  EXPECT_EQ(report.tables[2].kind, TableKind::cleaning);
}

TEST(Report, SchemaCheckerCatchesBadShapes) {
  auto schema = report_schema();
  EXPECT_FALSE(schema::validate(schema, nlohmann::json::parse(R"({"tables": []})")).empty());
  EXPECT_FALSE(schema::validate(schema, nlohmann::json::parse(
      R"({"tables": [{"kind": "x", "dataset": "d", "model": "m", "rows": [{"rule": "argmax", "count": 1, "precision": null, "recall": null}]}]})")).empty());
  EXPECT_FALSE(schema::validate(schema, nlohmann::json::parse(
      R"({"tables": [{"kind": "cleaning", "dataset": "d", "model": "m", "rows": [{"rule": "argmax", "count": 1, "precision": 1.5, "recall": null}]}]})")).empty());
}

TEST(ReportManifest, ReadsEachMode) {
  nlohmann::json base{{"table", "extraction"},
                      {"dataset", {{"name", "snli"}}},
                      {"scorer", {{"model_id", "m"}}},
                      {"rule", "t:0.75"}};
  auto extract = base;
  extract["mode"] = "extract";
  extract["counts"] = {{"extracted", 3}};
  auto e = report_entry_from_manifest(extract);
  EXPECT_EQ(*e.count, 3u);
  EXPECT_EQ(e.rule, DecisionRule::threshold(0.75));

  auto clean = base;
  clean["mode"] = "clean";
  clean["table"] = "cleaning";
  clean["counts"] = {{"removed", 2}, {"kept", 6}};
  EXPECT_EQ(*report_entry_from_manifest(clean).count, 2u);

  auto model = base;
  model["mode"] = "evaluate";
  model["analysis"] = "model";
  model["metrics"] = {{"precision", nullptr}, {"recall", 0.25}};
  auto m = report_entry_from_manifest(model);
  EXPECT_FALSE(m.precision);
  EXPECT_EQ(*m.recall, 0.25);

  auto similarity = base;
  similarity["mode"] = "evaluate";
  similarity["analysis"] = "similarity";
  EXPECT_THROW(report_entry_from_manifest(similarity), ConfigError);
  auto missing = extract;
  missing.erase("rule");
  EXPECT_THROW(report_entry_from_manifest(missing), ConfigError);
}
