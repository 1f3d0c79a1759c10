#include <gtest/gtest.h>

#include <cmath>

#include "bident/onnx_graph.hpp"
#include "onnx_builder.hpp"

using namespace bident;
using namespace bident::inference;

namespace {

std::vector<float> values(const Tensor& t) { return {t.f32().begin(), t.f32().end()}; }

void expect_near(const std::vector<float>& got, const std::vector<float>& want, float tol = 1e-5f) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "at " << i;
}

Tensor run_one(GraphBuilder& g, std::map<std::string, Tensor> feeds) {
  auto graph = OnnxGraph::parse(g.serialize());
  auto out = graph.run(feeds);
  EXPECT_EQ(out.size(), 1u);
  return out.at(0);
}

}  // namespace

TEST(OnnxGraph, MatMulAddRelu) {
  GraphBuilder g;
  g.input("x", kFloat, {2, 3});
  g.floats("w", {3, 2}, {1, 0, 0, 1, 1, -1});
  g.floats("b", {2}, {0.5f, -10});
  g.node("MatMul", {"x", "w"}, {"xw"});
  g.node("Add", {"xw", "b"}, {"y"});
  g.node("Relu", {"y"}, {"out"});
  g.output("out");
  auto out = run_one(g, {{"x", Tensor::floats({2, 3}, {1, 2, 3, -1, 0, 4})}});
  // rows: [1+3, 2-3] = [4, -1]; [-1+4, 0-4] = [3, -4]; plus bias, relu.
  EXPECT_EQ(out.shape(), (std::vector<std::int64_t>{2, 2}));
  expect_near(values(out), {4.5f, 0, 3.5f, 0});
}

TEST(OnnxGraph, BatchedMatMulBroadcastsLeadingDims) {
  GraphBuilder g;
  g.input("a", kFloat, {2, 1, 2});
  g.floats("b", {2, 2}, {1, 2, 3, 4});
  g.node("MatMul", {"a", "b"}, {"out"});
  g.output("out");
  auto out = run_one(g, {{"a", Tensor::floats({2, 1, 2}, {1, 0, 0, 1})}});
  EXPECT_EQ(out.shape(), (std::vector<std::int64_t>{2, 1, 2}));
  expect_near(values(out), {1, 2, 3, 4});
}

TEST(OnnxGraph, GemmWithTransposeAndScale) {
  GraphBuilder g;
  g.input("a", kFloat, {1, 2});
  g.floats("b", {3, 2}, {1, 0, 0, 1, 1, 1});
  g.floats("c", {3}, {1, 1, 1});
  auto& n = g.node("Gemm", {"a", "b", "c"}, {"out"});
  GraphBuilder::attr(n, "transB", std::int64_t{1});
  GraphBuilder::attr_float(n, "alpha", 2.0f);
  GraphBuilder::attr_float(n, "beta", 0.5f);
  g.output("out");
  auto out = run_one(g, {{"a", Tensor::floats({1, 2}, {1, 2})}});
  expect_near(values(out), {2 * 1 + 0.5f, 2 * 2 + 0.5f, 2 * 3 + 0.5f});
}

TEST(OnnxGraph, SoftmaxLastAxis) {
  GraphBuilder g;
  g.input("x", kFloat, {2, 2});
  GraphBuilder::attr(g.node("Softmax", {"x"}, {"out"}), "axis", std::int64_t{-1});
  g.output("out");
  auto out = run_one(g, {{"x", Tensor::floats({2, 2}, {0, 0, 0, std::log(3.0f)})}});
  expect_near(values(out), {0.5f, 0.5f, 0.25f, 0.75f});
}

TEST(OnnxGraph, LayerNormalization) {
  GraphBuilder g;
  g.input("x", kFloat, {1, 4});
  g.floats("scale", {4}, {1, 1, 2, 2});
  g.floats("bias", {4}, {0, 0, 0, 1});
  auto& n = g.node("LayerNormalization", {"x", "scale", "bias"}, {"out"});
  GraphBuilder::attr_float(n, "epsilon", 0.0f);
  g.output("out");
  auto out = run_one(g, {{"x", Tensor::floats({1, 4}, {1, 2, 3, 4})}});
  // mean 2.5, variance 1.25
  const float s = 1.0f / std::sqrt(1.25f);
  expect_near(values(out), {-1.5f * s, -0.5f * s, 2 * 0.5f * s, 2 * 1.5f * s + 1});
}

TEST(OnnxGraph, ShapeOpsReshapeTransposeConcatSlice) {
  GraphBuilder g;
  g.input("x", kFloat, {2, 3});
  g.ints("shape", {3}, {0, 3, -1});
  g.node("Reshape", {"x", "shape"}, {"r"});  // [2,3,1]
  GraphBuilder::attr(g.node("Transpose", {"r"}, {"t"}), "perm", std::vector<std::int64_t>{2, 0, 1});  // [1,2,3]
  GraphBuilder::attr(g.node("Concat", {"t", "t"}, {"c"}), "axis", std::int64_t{0});  // [2,2,3]
  g.ints("starts", {2}, {1, -1});
  g.ints("ends", {2}, {2, -100});
  g.ints("axes", {2}, {0, 2});
  g.ints("steps", {2}, {1, -2});
  g.node("Slice", {"c", "starts", "ends", "axes", "steps"}, {"out"});
  g.output("out");
  auto out = run_one(g, {{"x", Tensor::floats({2, 3}, {1, 2, 3, 4, 5, 6})}});
  EXPECT_EQ(out.shape(), (std::vector<std::int64_t>{1, 2, 2}));
  // Second copy, columns 2 and 0.
  expect_near(values(out), {3, 1, 6, 4});
}

TEST(OnnxGraph, GatherWhereExpandAndComparisons) {
  GraphBuilder g;
  g.input("ids", kInt64, {3});
  g.floats("table", {3, 2}, {0, 1, 10, 11, 20, 21});
  g.node("Gather", {"table", "ids"}, {"rows"});  // [3,2]
  g.floats("limit", {1}, {10.5f});
  g.node("Greater", {"rows", "limit"}, {"big"});
  g.floats("zero", {1}, {0});
  g.node("Where", {"big", "rows", "zero"}, {"w"});
  g.ints("shape", {3}, {2, 3, 2});
  g.node("Expand", {"w", "shape"}, {"out"});
  g.output("out");
  auto out = run_one(g, {{"ids", Tensor::ints({3}, {2, 0, 1})}});
  EXPECT_EQ(out.shape(), (std::vector<std::int64_t>{2, 3, 2}));
  expect_near(values(out), {20, 21, 0, 0, 0, 11, 20, 21, 0, 0, 0, 11});
}

TEST(OnnxGraph, ReduceMeanAxesAttributeBeforeOpset18) {
  GraphBuilder g(13);
  g.input("x", kFloat, {2, 2});
  auto& n = g.node("ReduceMean", {"x"}, {"out"});
  GraphBuilder::attr(n, "axes", std::vector<std::int64_t>{0});
  GraphBuilder::attr(n, "keepdims", std::int64_t{0});
  g.output("out");
  auto out = run_one(g, {{"x", Tensor::floats({2, 2}, {1, 2, 3, 6})}});
  expect_near(values(out), {2, 4});
}

TEST(OnnxGraph, ErfGeluShape) {
  GraphBuilder g;
  g.input("x", kFloat, {3});
  g.node("Erf", {"x"}, {"e"});
  g.node("Sqrt", {"x"}, {"s"});
  g.node("Sum", {"e", "s"}, {"out"});
  g.output("out");
  auto out = run_one(g, {{"x", Tensor::floats({3}, {0, 1, 4})}});
  expect_near(values(out), {0, std::erf(1.0f) + 1, std::erf(4.0f) + 2});
}

TEST(OnnxGraph, ShapeConstantOfShapeCastUnsqueeze) {
  GraphBuilder g;
  g.input("x", kFloat, {2, 5});
  g.node("Shape", {"x"}, {"s"});
  g.node("ConstantOfShape", {"s"}, {"zeros"});
  g.ints("ax", {1}, {0});
  g.node("Unsqueeze", {"zeros", "ax"}, {"u"});
  g.node("Add", {"u", "x"}, {"out"});
  g.output("out");
  auto out = run_one(g, {{"x", Tensor::floats({2, 5}, std::vector<float>(10, 1.5f))}});
  EXPECT_EQ(out.shape(), (std::vector<std::int64_t>{1, 2, 5}));
  expect_near(values(out), std::vector<float>(10, 1.5f));
}

TEST(OnnxGraph, UnsupportedOperatorNamedAtLoad) {
  GraphBuilder g;
  g.input("x", kFloat, {1});
  g.node("NonMaxSuppression", {"x"}, {"out"});
  g.output("out");
  try {
    OnnxGraph::parse(g.serialize());
    FAIL() << "expected GraphError";
  } catch (const GraphError& e) {
    EXPECT_NE(std::string(e.what()).find("NonMaxSuppression"), std::string::npos);
  }
  EXPECT_FALSE(OnnxGraph::supports("NonMaxSuppression"));
  EXPECT_TRUE(OnnxGraph::supports("MatMul"));
}

TEST(OnnxGraph, GarbageBytesRejected) {
  EXPECT_THROW(OnnxGraph::parse("definitely not a protobuf"), GraphError);
}

TEST(OnnxGraph, MissingFeedRejected) {
  GraphBuilder g;
  g.input("x", kFloat, {1});
  g.node("Relu", {"x"}, {"out"});
  g.output("out");
  auto graph = OnnxGraph::parse(g.serialize());
  EXPECT_EQ(graph.input_names(), (std::vector<std::string>{"x"}));
  EXPECT_EQ(graph.output_names(), (std::vector<std::string>{"out"}));
  EXPECT_THROW(graph.run({}), GraphError);
}

TEST(OnnxGraph, TinyClassifierMatchesStraightLineForward) {
  auto model = TinyClassifier::random(32, 6, 3, 11);
  auto graph = OnnxGraph::parse(model.to_onnx());
  auto tok = PairTokenizer::from_id("whitespace-hash:32");
  std::vector<SequencePair> pairs{{"a man plays", "a man"}, {"dogs run fast in snow", "dogs"}, {"x", "y z w"}};
  const std::size_t len = 8;
  std::vector<std::int64_t> ids, mask, types;
  std::vector<EncodedPair> encoded;
  for (const auto& p : pairs) {
    encoded.push_back(tok.encode(p, len));
    ids.insert(ids.end(), encoded.back().input_ids.begin(), encoded.back().input_ids.end());
    mask.insert(mask.end(), encoded.back().attention_mask.begin(), encoded.back().attention_mask.end());
    types.insert(types.end(), encoded.back().token_type_ids.begin(), encoded.back().token_type_ids.end());
  }
  const std::int64_t b = static_cast<std::int64_t>(pairs.size());
  auto out = graph.run({{"input_ids", Tensor::ints({b, 8}, ids)},
                        {"attention_mask", Tensor::ints({b, 8}, mask)},
                        {"token_type_ids", Tensor::ints({b, 8}, types)}});
  ASSERT_EQ(out.at(0).shape(), (std::vector<std::int64_t>{b, 3}));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto want = model.reference(encoded[i]);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(out[0].f32()[i * 3 + c], want[c], 1e-5);
  }
}
