#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bident/error.hpp"

// A small CPU interpreter for ONNX inference graphs. It covers the operator set
// that sequence-pair classifiers of the exported kind use (embeddings, dense
// layers, normalization, pooling, softmax) and rejects anything else at load.
namespace bident::inference {

class GraphError : public Error {
 public:
  using Error::Error;
};

enum class ElementType { float32, int64, boolean };

class Tensor {
 public:
  Tensor() = default;

  static Tensor floats(std::vector<std::int64_t> shape, std::vector<float> values);
  static Tensor ints(std::vector<std::int64_t> shape, std::vector<std::int64_t> values);
  static Tensor bools(std::vector<std::int64_t> shape, std::vector<std::uint8_t> values);

  ElementType type() const;
  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const;

  std::span<const float> f32() const;
  std::span<const std::int64_t> i64() const;
  std::span<const std::uint8_t> b8() const;

  using Storage = std::variant<std::vector<float>, std::vector<std::int64_t>, std::vector<std::uint8_t>>;
  const Storage& storage() const { return data_; }

  Tensor reshaped(std::vector<std::int64_t> shape) const;

 private:
  Tensor(std::vector<std::int64_t> shape, Storage data);

  std::vector<std::int64_t> shape_;
  Storage data_ = std::vector<float>{};
};

std::size_t element_count(std::span<const std::int64_t> shape);

class OnnxGraph {
 public:
  static OnnxGraph load(const std::filesystem::path& path);
  static OnnxGraph parse(std::string_view serialized_model);

  OnnxGraph(OnnxGraph&&) noexcept;
  OnnxGraph& operator=(OnnxGraph&&) noexcept;
  ~OnnxGraph();

  // Graph inputs that are not initializers, in declaration order.
  const std::vector<std::string>& input_names() const;
  const std::vector<std::string>& output_names() const;
  std::int64_t opset() const;

  // Evaluates the graph. Safe to call concurrently.
  std::vector<Tensor> run(const std::map<std::string, Tensor>& feeds) const;

  static bool supports(std::string_view op_type);

 private:
  struct Impl;
  explicit OnnxGraph(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace bident::inference
