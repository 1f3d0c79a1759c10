#include <gtest/gtest.h>

#include "bident/error.hpp"
#include "bident/scoring.hpp"
#include "bident/tokenizer.hpp"
#include "onnx_builder.hpp"
#include "temp_dir.hpp"

using namespace bident;

namespace {

std::filesystem::path write_model(const TempDir& dir, const TinyClassifier& model, const std::string& sidecar) {
  auto path = dir / "model.onnx";
  std::ofstream(path, std::ios::binary) << model.to_onnx();
  dir.write("model.json", sidecar);
  return path;
}

const char* kNliSidecar =
    R"({"task":"nli-3way","class_names":["contradiction","entailment","neutral"],)"
    R"("tokenizer_id":"whitespace-hash:64","max_sequence_length":10,"model_id":"tiny-nli"})";

std::vector<SequencePair> some_pairs() {
  return {{"a man plays a guitar", "a man plays"},
          {"two dogs run", "dogs run through the deep white snow today"},
          {"x", "y"},
          {"the cat sat on the mat", "the cat sat on the mat"},
          {"one two three four five six seven", "eight nine"}};
}

}  // namespace

TEST(LocalModel, MatchesReferenceForwardAndMapsClassOrder) {
  TempDir dir;
  auto model = TinyClassifier::random(64, 8, 3, 5);
  auto path = write_model(dir, model, kNliSidecar);
  LocalModelScorer scorer(path);
  EXPECT_EQ(scorer.descriptor().model_id, "tiny-nli");
  EXPECT_EQ(scorer.descriptor().max_sequence_length, 10u);
  EXPECT_EQ(scorer.task(), Task::nli_3way);

  const auto pairs = some_pairs();
  const auto dists = score_batch(scorer, pairs);
  auto tok = PairTokenizer::from_id("whitespace-hash:64");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto want = model.reference(tok.encode(pairs[i], 10));
    // Output column k is sidecar class k.
    EXPECT_NEAR(dists[i].at("contradiction"), want[0], 1e-5);
    EXPECT_NEAR(dists[i].at("entailment"), want[1], 1e-5);
    EXPECT_NEAR(dists[i].at("neutral"), want[2], 1e-5);
    // Validated output is in canonical order.
    EXPECT_EQ(dists[i].entries()[0].first, "entailment");
  }
  // Four pairs need more than 10 slots.
  EXPECT_EQ(scorer.truncation_count(), 4u);
}

TEST(LocalModel, BatchingDoesNotChangeScores) {
  TempDir dir;
  auto path = write_model(dir, TinyClassifier::random(64, 8, 3, 9), kNliSidecar);
  LocalModelScorer one(path), many(path);
  ScoreOptions single;
  single.batch_size = 1;
  ScoreOptions wide;
  wide.batch_size = 4;
  wide.workers = 3;
  EXPECT_EQ(score_batch(one, some_pairs(), single), score_batch(many, some_pairs(), wide));
}

TEST(LocalModel, SidecarProblemsAreModelLoadErrors) {
  TempDir dir;
  auto model = TinyClassifier::random(64, 8, 3, 1);
  auto expect_load_error = [&](const std::string& sidecar) {
    auto path = write_model(dir, model, sidecar);
    try {
      LocalModelScorer scorer(path);
      ADD_FAILURE() << "loaded with sidecar " << sidecar;
    } catch (const ScoringError& e) {
      EXPECT_EQ(e.kind(), ScoringError::Kind::model_load);
    }
  };
  expect_load_error(R"({"task":"nli-3way","class_names":["entailment","neutral","contradiction"],)"
                    R"("tokenizer_id":"whitespace-hash:64","max_sequence_length":2})");
  expect_load_error(R"({"task":"nli-3way","class_names":["a","b","c"],)"
                    R"("tokenizer_id":"whitespace-hash:64","max_sequence_length":10})");
  expect_load_error(R"({"task":"nli-3way","class_names":["entailment","neutral","contradiction"],)"
                    R"("tokenizer_id":"sentencepiece","max_sequence_length":10})");
  expect_load_error("not json");
}

TEST(LocalModel, OutputWidthMismatchIsReported) {
  TempDir dir;
  // Three output columns but a two-class sidecar.
  auto path = write_model(dir, TinyClassifier::random(64, 8, 3, 2),
                          R"({"task":"paraphrase-2way","class_names":["paraphrase","non-paraphrase"],)"
                          R"("tokenizer_id":"whitespace-hash:64","max_sequence_length":10})");
  LocalModelScorer scorer(path);
  EXPECT_THROW(score_batch(scorer, some_pairs()), ScoringError);
}

TEST(LocalModel, MissingSidecarAndUnsupportedOperator) {
  TempDir dir;
  auto lonely = dir / "lonely.onnx";
  std::ofstream(lonely, std::ios::binary) << TinyClassifier::random(8, 2, 3, 1).to_onnx();
  EXPECT_THROW(LocalModelScorer{lonely}, ScoringError);

  GraphBuilder g;
  g.input("input_ids", kInt64, {-1, -1});
  g.node("TopK", {"input_ids"}, {"probs"});
  g.output("probs");
  g.save(dir / "odd.onnx");
  dir.write("odd.json", kNliSidecar);
  try {
    LocalModelScorer scorer(dir / "odd.onnx");
    FAIL();
  } catch (const ScoringError& e) {
    EXPECT_EQ(e.kind(), ScoringError::Kind::model_load);
    EXPECT_NE(std::string(e.what()).find("TopK"), std::string::npos);
  }
}

TEST(LocalModel, SidecarPath) {
  EXPECT_EQ(sidecar_path_for("/m/model.onnx"), std::filesystem::path("/m/model.json"));
}
