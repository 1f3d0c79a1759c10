#include "onnx_builder.hpp"

#include <cmath>
#include <fstream>
#include <random>

GraphBuilder::GraphBuilder(int opset) {
  model_.set_ir_version(8);
  model_.set_producer_name("bident-tests");
  auto* op = model_.add_opset_import();
  op->set_domain("");
  op->set_version(opset);
  model_.mutable_graph()->set_name("test");
}

void GraphBuilder::input(const std::string& name, int elem_type, const std::vector<std::int64_t>& dims) {
  auto* in = model_.mutable_graph()->add_input();
  in->set_name(name);
  auto* tensor = in->mutable_type()->mutable_tensor_type();
  tensor->set_elem_type(elem_type);
  auto* shape = tensor->mutable_shape();
  for (auto d : dims) {
    auto* dim = shape->add_dim();
    if (d < 0) dim->set_dim_param("d" + std::to_string(counter_++));
    else dim->set_dim_value(d);
  }
}

void GraphBuilder::output(const std::string& name) {
  auto* out = model_.mutable_graph()->add_output();
  out->set_name(name);
  out->mutable_type()->mutable_tensor_type()->set_elem_type(kFloat);
}

void GraphBuilder::floats(const std::string& name, const std::vector<std::int64_t>& shape,
                          const std::vector<float>& values) {
  auto* t = model_.mutable_graph()->add_initializer();
  t->set_name(name);
  t->set_data_type(kFloat);
  for (auto d : shape) t->add_dims(d);
  for (auto v : values) t->add_float_data(v);
}

void GraphBuilder::ints(const std::string& name, const std::vector<std::int64_t>& shape,
                        const std::vector<std::int64_t>& values) {
  auto* t = model_.mutable_graph()->add_initializer();
  t->set_name(name);
  t->set_data_type(kInt64);
  for (auto d : shape) t->add_dims(d);
  // Raw little-endian bytes, the layout exporters usually emit.
  t->set_raw_data(std::string(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(std::int64_t)));
}

onnx::NodeProto& GraphBuilder::node(const std::string& op, const std::vector<std::string>& inputs,
                                    const std::vector<std::string>& outputs) {
  auto* n = model_.mutable_graph()->add_node();
  n->set_op_type(op);
  n->set_name(op + "_" + std::to_string(counter_++));
  for (const auto& i : inputs) n->add_input(i);
  for (const auto& o : outputs) n->add_output(o);
  return *n;
}

void GraphBuilder::attr(onnx::NodeProto& node, const std::string& name, std::int64_t value) {
  auto* a = node.add_attribute();
  a->set_name(name);
  a->set_type(onnx::AttributeProto_AttributeType_INT);
  a->set_i(value);
}

void GraphBuilder::attr(onnx::NodeProto& node, const std::string& name, const std::vector<std::int64_t>& values) {
  auto* a = node.add_attribute();
  a->set_name(name);
  a->set_type(onnx::AttributeProto_AttributeType_INTS);
  for (auto v : values) a->add_ints(v);
}

void GraphBuilder::attr_float(onnx::NodeProto& node, const std::string& name, float value) {
  auto* a = node.add_attribute();
  a->set_name(name);
  a->set_type(onnx::AttributeProto_AttributeType_FLOAT);
  a->set_f(value);
}

std::string GraphBuilder::serialize() const { return model_.SerializeAsString(); }

void GraphBuilder::save(const std::filesystem::path& path) const {
  std::ofstream(path, std::ios::binary) << serialize();
}

TinyClassifier TinyClassifier::random(std::int64_t vocab, std::int64_t dim, std::int64_t classes, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  TinyClassifier c;
  c.vocab = vocab;
  c.dim = dim;
  c.classes = classes;
  c.embedding.resize(vocab * dim);
  c.type_embedding.resize(2 * dim);
  c.weight.resize(dim * classes);
  c.bias.resize(classes);
  for (auto* v : {&c.embedding, &c.type_embedding, &c.weight, &c.bias}) {
    for (auto& x : *v) x = u(gen);
  }
  return c;
}

std::string TinyClassifier::to_onnx(int opset) const {
  GraphBuilder g(opset);
  g.input("input_ids", kInt64, {-1, -1});
  g.input("attention_mask", kInt64, {-1, -1});
  g.input("token_type_ids", kInt64, {-1, -1});
  g.floats("embedding", {vocab, dim}, embedding);
  g.floats("type_embedding", {2, dim}, type_embedding);
  g.floats("weight", {dim, classes}, weight);
  g.floats("bias", {classes}, bias);
  g.ints("axis2", {1}, {2});
  g.ints("axis1", {1}, {1});

  g.node("Gather", {"embedding", "input_ids"}, {"tok"});
  g.node("Gather", {"type_embedding", "token_type_ids"}, {"typ"});
  g.node("Add", {"tok", "typ"}, {"x"});
  GraphBuilder::attr(g.node("Cast", {"attention_mask"}, {"mask"}), "to", std::int64_t{kFloat});
  g.node("Unsqueeze", {"mask", "axis2"}, {"mask3"});
  g.node("Mul", {"x", "mask3"}, {"masked"});
  GraphBuilder::attr(g.node("ReduceSum", {"masked", "axis1"}, {"sum"}), "keepdims", std::int64_t{0});
  GraphBuilder::attr(g.node("ReduceSum", {"mask", "axis1"}, {"count"}), "keepdims", std::int64_t{1});
  g.node("Div", {"sum", "count"}, {"mean"});
  g.node("Tanh", {"mean"}, {"h"});
  g.node("Gemm", {"h", "weight", "bias"}, {"logits"});
  GraphBuilder::attr(g.node("Softmax", {"logits"}, {"probs"}), "axis", std::int64_t{-1});
  g.output("probs");
  return g.serialize();
}

std::vector<double> TinyClassifier::reference(const bident::EncodedPair& e) const {
  std::vector<double> sum(dim, 0.0);
  double count = 0.0;
  for (std::size_t t = 0; t < e.input_ids.size(); ++t) {
    if (e.attention_mask[t] == 0) continue;
    count += 1.0;
    for (std::int64_t d = 0; d < dim; ++d) {
      sum[d] += embedding[e.input_ids[t] * dim + d] + type_embedding[e.token_type_ids[t] * dim + d];
    }
  }
  std::vector<double> logits(classes);
  for (std::int64_t c = 0; c < classes; ++c) {
    double z = bias[c];
    for (std::int64_t d = 0; d < dim; ++d) z += std::tanh(sum[d] / count) * weight[d * classes + c];
    logits[c] = z;
  }
  double top = logits[0];
  for (double z : logits) top = std::max(top, z);
  double total = 0.0;
  for (auto& z : logits) total += (z = std::exp(z - top));
  for (auto& z : logits) z /= total;
  return logits;
}
