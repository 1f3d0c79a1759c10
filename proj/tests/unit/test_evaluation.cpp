#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "bident/error.hpp"
#include "bident/evaluation.hpp"
#include "oracles.hpp"

using namespace bident;

namespace {

std::vector<ExtractionRecord> records_with_ids(const std::vector<std::string>& ids) {
  std::vector<ExtractionRecord> out;
  for (const auto& id : ids) {
    ExtractionRecord r;
    r.source_id = id;
    r.s1 = "h " + id;
    r.s2 = "p " + id;
    out.push_back(r);
  }
  return out;
}

std::u32string to_u32(const std::string& s) { return std::u32string(s.begin(), s.end()); }

}  // namespace

TEST(Confusion, SpecExampleAndIdentity) {
  std::vector<std::string> gold{"e", "e", "n", "c"}, pred{"e", "n", "e", "c"};
  auto c = confusion(gold, pred, "e");
  EXPECT_EQ(c.tp, 1u);
  EXPECT_EQ(c.fn, 1u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.tn, 1u);
  auto same = confusion(gold, gold, "e");
  EXPECT_EQ(same.fp + same.fn, 0u);
  EXPECT_THROW(confusion(gold, std::vector<std::string>{"e"}, "e"), ConfigError);
  EXPECT_THROW(confusion(std::vector<std::string>{}, std::vector<std::string>{}, "e"), ConfigError);
}

TEST(Confusion, CleaningRunHandEnumeration) {
  // Six paraphrase-corpus instances scored for non-paraphrase.
  std::vector<std::string> gold{"paraphrase", "non-paraphrase", "non-paraphrase", "paraphrase", "non-paraphrase",
                                "paraphrase"};
  std::vector<std::string> pred{"non-paraphrase", "non-paraphrase", "paraphrase", "paraphrase", "non-paraphrase",
                                "paraphrase"};
  auto c = confusion(gold, pred, "non-paraphrase");
  EXPECT_EQ(c.tp, 2u);  // instances 2, 5
  EXPECT_EQ(c.fp, 1u);  // instance 1
  EXPECT_EQ(c.fn, 1u);  // instance 3
  EXPECT_EQ(c.tn, 2u);  // instances 4, 6
  auto m = metrics(c);
  EXPECT_EQ(*m.precision, 2.0 / 3.0);
  EXPECT_EQ(*m.recall, 2.0 / 3.0);
}

TEST(Metrics, ExactFormulaAndUndefinedDenominators) {
  ConfusionCounts c{"entailment", 2, 1, 1, 0};
  auto m = metrics(c);
  EXPECT_EQ(*m.precision, 2.0 / 3.0);
  EXPECT_EQ(*m.recall, 2.0 / 3.0);
  auto none_predicted = metrics({"entailment", 0, 0, 3, 5});
  EXPECT_FALSE(none_predicted.precision.has_value());
  EXPECT_EQ(*none_predicted.recall, 0.0);
  auto no_positives = metrics({"entailment", 0, 2, 0, 5});
  EXPECT_EQ(*no_positives.precision, 0.0);
  EXPECT_FALSE(no_positives.recall.has_value());
  EXPECT_TRUE(to_json(c, metrics({"e", 0, 0, 0, 1}))["precision"].is_null());
}

TEST(Metrics, AgreesWithBruteForceOnRandomLists) {
  std::mt19937_64 gen(2024);
  const std::vector<std::string> classes{"entailment", "neutral", "contradiction"};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + gen() % 40;
    std::vector<std::string> gold, pred;
    for (std::size_t i = 0; i < n; ++i) {
      gold.push_back(classes[gen() % 3]);
      pred.push_back(classes[gen() % 3]);
    }
    const auto& positive = classes[gen() % 3];
    auto c = confusion(gold, pred, positive);
    auto m = metrics(c);
    auto want = oracle::brute_force_metrics(gold, pred, positive);
    ASSERT_EQ(long(c.tp), want.tp);
    ASSERT_EQ(long(c.fp), want.fp);
    ASSERT_EQ(long(c.fn), want.fn);
    ASSERT_EQ(long(c.tn), want.tn);
    ASSERT_EQ(c.total(), n);
    ASSERT_EQ(m.precision.has_value(), want.precision.has_value());
    ASSERT_EQ(m.recall.has_value(), want.recall.has_value());
    if (m.precision) ASSERT_NEAR(*m.precision, *want.precision, 1e-12);
    if (m.recall) ASSERT_NEAR(*m.recall, *want.recall, 1e-12);
  }
}

TEST(ConfusionMatrix, CountsEveryCell) {
  std::vector<std::string> gold{"entailment", "neutral", "neutral"}, pred{"neutral", "neutral", "contradiction"};
  auto m = confusion_matrix(gold, pred, class_names(Task::nli_3way));
  EXPECT_EQ(m.counts[0][1], 1u);
  EXPECT_EQ(m.counts[1][1], 1u);
  EXPECT_EQ(m.counts[1][2], 1u);
  std::vector<std::string> bad{"maybe", "neutral", "neutral"};
  EXPECT_THROW(confusion_matrix(bad, pred, class_names(Task::nli_3way)), ConfigError);
}

TEST(Sampling, SizeDistinctnessDeterminismClamp) {
  std::vector<std::string> ids;
  for (int i = 0; i < 500; ++i) ids.push_back("id" + std::to_string(i));
  auto records = records_with_ids(ids);
  auto a = sample_for_validation(records, 100, 13);
  auto b = sample_for_validation(records, 100, 13);
  ASSERT_EQ(a.rows.size(), 100u);
  std::set<std::string> distinct;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    distinct.insert(a.rows[i].source_id);
    EXPECT_EQ(a.rows[i].source_id, b.rows[i].source_id);
    EXPECT_TRUE(a.rows[i].verdict.empty());
  }
  EXPECT_EQ(distinct.size(), 100u);
  auto small = records_with_ids({"a", "b", "c"});
  EXPECT_EQ(sample_for_validation(small, 100, 1).rows.size(), 3u);
  EXPECT_NE(sample_for_validation(records, 100, 14).rows[0].source_id + sample_for_validation(records, 100, 14).rows[1].source_id,
            a.rows[0].source_id + a.rows[1].source_id);
}

TEST(AnnotationSheet, TsvRoundTripWithEscapes) {
  AnnotationSheet sheet;
  sheet.rows.push_back({"x1", "tab\there", "new\nline and back\\slash", "yes"});
  sheet.rows.push_back({"x2", "plain", "text", ""});
  std::stringstream buf;
  write_tsv(buf, sheet);
  EXPECT_EQ(buf.str().substr(0, 26), "source_id\ts1\ts2\tverdict\nx1");
  auto back = read_tsv(buf);
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.rows[0].s1, "tab\there");
  EXPECT_EQ(back.rows[0].s2, "new\nline and back\\slash");
  EXPECT_EQ(back.rows[1].verdict, "");
}

TEST(HandPrecision, FractionOfYes) {
  auto sheet_with = [](int yes, int no) {
    AnnotationSheet s;
    for (int i = 0; i < yes; ++i) s.rows.push_back({"y" + std::to_string(i), "a", "b", i % 2 ? "YES" : "yes"});
    for (int i = 0; i < no; ++i) s.rows.push_back({"n" + std::to_string(i), "a", "b", " No "});
    return s;
  };
  EXPECT_DOUBLE_EQ(hand_precision(sheet_with(79, 21)), 0.79);
  EXPECT_EQ(hand_precision(sheet_with(0, 5)), 0.0);
  EXPECT_DOUBLE_EQ(hand_precision(sheet_with(9, 1)), 0.9);
}

TEST(HandPrecision, UnfilledVerdictNamesRow) {
  AnnotationSheet s;
  s.rows.push_back({"a", "x", "y", "yes"});
  s.rows.push_back({"b", "x", "y", "maybe"});
  try {
    hand_precision(s);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
  s.rows[1].verdict = "";
  EXPECT_THROW(hand_precision(s), DataError);
  EXPECT_THROW(hand_precision(AnnotationSheet{}), DataError);
}

TEST(Levenshtein, ClassicExamples) {
  EXPECT_EQ(levenshtein(std::string_view("kitten"), std::string_view("sitting")), 3u);
  EXPECT_DOUBLE_EQ(normalized_edit_distance("kitten", "sitting"), 3.0 / 7.0);
  EXPECT_EQ(normalized_edit_distance("abc", "abc"), 0.0);
  EXPECT_EQ(normalized_edit_distance("", "abc"), 1.0);
  EXPECT_EQ(normalized_edit_distance("", ""), 0.0);
  // Code points, not bytes: one substitution.
  EXPECT_EQ(levenshtein(std::string_view("caf\xC3\xA9"), std::string_view("cafe")), 1u);
}

TEST(Levenshtein, ExhaustiveAgainstNaiveRecursionUpToFive) {
  const auto strings = oracle::all_strings(U"abc", 5);
  ASSERT_EQ(strings.size(), 364u);
  for (const auto& a : strings) {
    for (const auto& b : strings) {
      ASSERT_EQ(levenshtein(a, b), oracle::naive_levenshtein(a, b)) << std::string(a.begin(), a.end()) << "/"
                                                                      << std::string(b.begin(), b.end());
    }
  }
}

TEST(Levenshtein, RandomLongerStringsAgainstMemoizedRecursion) {
  std::mt19937 gen(8);
  for (int i = 0; i < 20000; ++i) {
    std::string a(gen() % 9, ' '), b(gen() % 9, ' ');
    for (auto& c : a) c = "abc"[gen() % 3];
    for (auto& c : b) c = "abc"[gen() % 3];
    ASSERT_EQ(levenshtein(to_u32(a), to_u32(b)), oracle::memo_levenshtein(to_u32(a), to_u32(b))) << a << "/" << b;
  }
}

TEST(Similarity, TokenRatioAndSummary) {
  EXPECT_EQ(token_length_ratio("a b c d", "a b"), 0.5);
  EXPECT_EQ(token_length_ratio("", ""), 1.0);
  EXPECT_EQ(token_length_ratio("", "a"), 0.0);
  auto s = summarize({4, 1, 3, 2});
  ASSERT_TRUE(s);
  EXPECT_DOUBLE_EQ(s->mean, 2.5);
  EXPECT_DOUBLE_EQ(s->median, 2.5);
  EXPECT_DOUBLE_EQ(s->q1, 1.75);
  EXPECT_DOUBLE_EQ(s->q3, 3.25);
  EXPECT_EQ(s->min, 1.0);
  EXPECT_EQ(s->max, 4.0);
  EXPECT_FALSE(summarize({}));
  auto one = summarize({0.3});
  EXPECT_EQ(one->q1, 0.3);
  EXPECT_EQ(one->q3, 0.3);
}

TEST(Similarity, StatsOverRecords) {
  std::vector<ExtractionRecord> records(2);
  records[0].s1 = "kitten";
  records[0].s2 = "sitting";
  records[1].s1 = "abc";
  records[1].s2 = "abc";
  auto stats = similarity_stats(records);
  EXPECT_EQ(stats.count, 2u);
  EXPECT_DOUBLE_EQ(stats.edit_distance->mean, 1.5 / 7.0);
  EXPECT_DOUBLE_EQ(stats.length_ratio->mean, 1.0);
  EXPECT_FALSE(similarity_stats({}).edit_distance);
}

TEST(Overlap, HandEnumeratedExample) {
  std::map<std::string, std::vector<ExtractionRecord>> runs{
      {"de", records_with_ids({"1", "2"})}, {"fr", records_with_ids({"2", "3"})}, {"es", records_with_ids({"2"})}};
  auto r = overlap(runs);
  EXPECT_EQ(r.unique_count, 3u);
  EXPECT_EQ(r.at_least, (std::vector<std::size_t>{3, 1, 1}));
  EXPECT_EQ(r.exactly, (std::vector<std::size_t>{2, 0, 1}));
  EXPECT_EQ(r.languages, (std::vector<std::string>{"de", "es", "fr"}));
  EXPECT_FALSE(r.unique_pivot_count);
}

TEST(Overlap, IdenticalAndDisjointRuns) {
  auto same = records_with_ids({"a", "b", "c"});
  auto r = overlap({{"x", same}, {"y", same}, {"z", same}});
  EXPECT_EQ(r.at_least.back(), r.unique_count);
  auto d = overlap({{"x", records_with_ids({"a"})}, {"y", records_with_ids({"b"})}});
  EXPECT_EQ(d.at_least[1], 0u);
}

TEST(Overlap, DuplicateIdWithinLanguageRejected) {
  EXPECT_THROW(overlap({{"x", records_with_ids({"a", "a"})}}), DataError);
}

TEST(Overlap, PivotTextCounting) {
  std::map<std::string, std::string> pivot{{"1", "same text"}, {"2", "same text"}};
  auto r = overlap({{"de", records_with_ids({"1", "2", "3"})}}, &pivot);
  EXPECT_EQ(r.unique_count, 3u);
  EXPECT_EQ(r.unique_pivot_count, 2u);
}

TEST(Overlap, RandomFixturesNonIncreasingAndConsistent) {
  std::mt19937 gen(100);
  for (int trial = 0; trial < 100; ++trial) {
    const int languages = 1 + gen() % 15;
    std::map<std::string, std::vector<ExtractionRecord>> runs;
    for (int l = 0; l < languages; ++l) {
      std::vector<std::string> ids;
      for (int id = 0; id < 60; ++id) {
        if (gen() % 3 == 0) ids.push_back(std::to_string(id));
      }
      runs["l" + std::to_string(l)] = records_with_ids(ids);
    }
    auto r = overlap(runs);
    ASSERT_EQ(r.at_least.size(), std::size_t(languages));
    EXPECT_EQ(r.at_least[0], r.unique_count);
    std::size_t exact_sum = 0;
    for (std::size_t k = 0; k < r.exactly.size(); ++k) exact_sum += r.exactly[k];
    EXPECT_EQ(exact_sum, r.unique_count);
    for (std::size_t k = 1; k < r.at_least.size(); ++k) EXPECT_LE(r.at_least[k], r.at_least[k - 1]);
  }
}
