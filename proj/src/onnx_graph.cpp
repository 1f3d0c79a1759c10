#include "bident/onnx_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <array>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "onnx.pb.h"

namespace bident::inference {

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(std::vector<std::int64_t> shape, Storage data) : shape_(std::move(shape)), data_(std::move(data)) {
  const std::size_t expected = element_count(shape_);
  const std::size_t actual = std::visit([](const auto& v) { return v.size(); }, data_);
  if (expected != actual) {
    throw GraphError("tensor shape holds " + std::to_string(expected) + " elements but " +
                     std::to_string(actual) + " were given");
  }
}

Tensor Tensor::floats(std::vector<std::int64_t> shape, std::vector<float> values) {
  return Tensor(std::move(shape), std::move(values));
}

Tensor Tensor::ints(std::vector<std::int64_t> shape, std::vector<std::int64_t> values) {
  return Tensor(std::move(shape), std::move(values));
}

Tensor Tensor::bools(std::vector<std::int64_t> shape, std::vector<std::uint8_t> values) {
  return Tensor(std::move(shape), std::move(values));
}

ElementType Tensor::type() const {
  switch (data_.index()) {
    case 0: return ElementType::float32;
    case 1: return ElementType::int64;
    default: return ElementType::boolean;
  }
}

std::size_t Tensor::size() const {
  return std::visit([](const auto& v) { return v.size(); }, data_);
}

std::span<const float> Tensor::f32() const {
  if (auto* v = std::get_if<std::vector<float>>(&data_)) return *v;
  throw GraphError("expected a float tensor");
}

std::span<const std::int64_t> Tensor::i64() const {
  if (auto* v = std::get_if<std::vector<std::int64_t>>(&data_)) return *v;
  throw GraphError("expected an int64 tensor");
}

std::span<const std::uint8_t> Tensor::b8() const {
  if (auto* v = std::get_if<std::vector<std::uint8_t>>(&data_)) return *v;
  throw GraphError("expected a bool tensor");
}

Tensor Tensor::reshaped(std::vector<std::int64_t> shape) const { return Tensor(std::move(shape), data_); }

std::size_t element_count(std::span<const std::int64_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw GraphError("negative dimension in tensor shape");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

namespace {

using Shape = std::vector<std::int64_t>;

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

Shape strides_of(const Shape& shape) {
  Shape strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i > 1; --i) strides[i - 2] = strides[i - 1] * shape[i - 1];
  return strides;
}

std::int64_t normalize_axis(std::int64_t axis, std::size_t rank, std::string_view op) {
  const auto r = static_cast<std::int64_t>(rank);
  if (axis < -r || axis >= r) {
    throw GraphError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for rank " +
                     std::to_string(rank));
  }
  return axis < 0 ? axis + r : axis;
}

Shape broadcast_shape(const Shape& a, const Shape& b, std::string_view op) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::int64_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::int64_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw GraphError(std::string(op) + ": cannot broadcast " + shape_string(a) + " with " + shape_string(b));
    }
    out[i] = da == 1 ? db : da;
  }
  return out;
}

// Strides of `shape` viewed inside the broadcast `out` shape (0 on broadcast dims).
Shape broadcast_strides(const Shape& shape, const Shape& out) {
  Shape strides(out.size(), 0);
  const Shape own = strides_of(shape);
  const std::size_t offset = out.size() - shape.size();
  for (std::size_t i = 0; i < shape.size(); ++i) strides[offset + i] = shape[i] == 1 ? 0 : own[i];
  return strides;
}

// Visits every element of `out`, passing the matching source offsets.
template <std::size_t N, class F>
void for_each_broadcast(const Shape& out, const std::array<Shape, N>& strides, F&& fn) {
  const std::size_t total = element_count(out);
  if (total == 0) return;
  const std::size_t rank = out.size();
  std::vector<std::int64_t> index(rank, 0);
  std::array<std::int64_t, N> offsets{};
  for (std::size_t linear = 0; linear < total; ++linear) {
    fn(linear, offsets);
    for (std::size_t d = rank; d-- > 0;) {
      ++index[d];
      for (std::size_t k = 0; k < N; ++k) offsets[k] += strides[k][d];
      if (index[d] < out[d]) break;
      for (std::size_t k = 0; k < N; ++k) offsets[k] -= strides[k][d] * index[d];
      index[d] = 0;
    }
  }
}

template <class T>
const std::vector<T>& values(const Tensor& t) {
  if (auto* v = std::get_if<std::vector<T>>(&t.storage())) return *v;
  throw GraphError("tensor has an unexpected element type");
}

// Builds a tensor of the same element type as `like` by gathering source offsets.
template <class IndexFn>
Tensor gather_like(const Tensor& source, Shape out_shape, std::size_t count, IndexFn&& source_index) {
  return std::visit(
      [&](const auto& src) -> Tensor {
        using V = std::decay_t<decltype(src)>;
        V out(count);
        for (std::size_t i = 0; i < count; ++i) out[i] = src[source_index(i)];
        if constexpr (std::is_same_v<V, std::vector<float>>) {
          return Tensor::floats(std::move(out_shape), std::move(out));
        } else if constexpr (std::is_same_v<V, std::vector<std::int64_t>>) {
          return Tensor::ints(std::move(out_shape), std::move(out));
        } else {
          return Tensor::bools(std::move(out_shape), std::move(out));
        }
      },
      source.storage());
}

std::vector<std::int64_t> to_int_vector(const Tensor& t) {
  if (t.type() == ElementType::int64) {
    auto v = t.i64();
    return {v.begin(), v.end()};
  }
  throw GraphError("expected an int64 tensor for shape/axes data");
}

// ---------------------------------------------------------------------------
// Protobuf conversion

Tensor from_proto(const onnx::TensorProto& proto) {
  Shape shape(proto.dims().begin(), proto.dims().end());
  const std::size_t count = element_count(shape);
  if (proto.has_data_location() && proto.data_location() == onnx::TensorProto::EXTERNAL) {
    throw GraphError("initializer '" + proto.name() + "' uses external data, which is not supported");
  }
  const std::string& raw = proto.raw_data();
  auto read_raw = [&](auto* dst, std::size_t width) {
    if (raw.size() != count * width) {
      throw GraphError("initializer '" + proto.name() + "' raw data has the wrong size");
    }
    std::memcpy(dst, raw.data(), raw.size());
  };

  switch (proto.data_type()) {
    case onnx::TensorProto::FLOAT: {
      std::vector<float> v(count);
      if (!raw.empty()) {
        read_raw(v.data(), sizeof(float));
      } else if (static_cast<std::size_t>(proto.float_data_size()) == count) {
        std::copy(proto.float_data().begin(), proto.float_data().end(), v.begin());
      } else if (count != 0) {
        throw GraphError("initializer '" + proto.name() + "' has no float data");
      }
      return Tensor::floats(std::move(shape), std::move(v));
    }
    case onnx::TensorProto::DOUBLE: {
      std::vector<double> d(count);
      if (!raw.empty()) {
        read_raw(d.data(), sizeof(double));
      } else {
        std::copy(proto.double_data().begin(), proto.double_data().end(), d.begin());
      }
      return Tensor::floats(std::move(shape), std::vector<float>(d.begin(), d.end()));
    }
    case onnx::TensorProto::INT64: {
      std::vector<std::int64_t> v(count);
      if (!raw.empty()) {
        read_raw(v.data(), sizeof(std::int64_t));
      } else if (static_cast<std::size_t>(proto.int64_data_size()) == count) {
        std::copy(proto.int64_data().begin(), proto.int64_data().end(), v.begin());
      } else if (count != 0) {
        throw GraphError("initializer '" + proto.name() + "' has no int64 data");
      }
      return Tensor::ints(std::move(shape), std::move(v));
    }
    case onnx::TensorProto::INT32: {
      std::vector<std::int32_t> w(count);
      if (!raw.empty()) {
        read_raw(w.data(), sizeof(std::int32_t));
      } else {
        std::copy(proto.int32_data().begin(), proto.int32_data().end(), w.begin());
      }
      return Tensor::ints(std::move(shape), std::vector<std::int64_t>(w.begin(), w.end()));
    }
    case onnx::TensorProto::BOOL: {
      std::vector<std::uint8_t> v(count);
      if (!raw.empty()) {
        read_raw(v.data(), 1);
      } else {
        std::transform(proto.int32_data().begin(), proto.int32_data().end(), v.begin(),
                       [](std::int32_t x) { return static_cast<std::uint8_t>(x != 0); });
      }
      return Tensor::bools(std::move(shape), std::move(v));
    }
    default:
      throw GraphError("initializer '" + proto.name() + "' has unsupported data type " +
                       std::to_string(proto.data_type()));
  }
}

struct Attribute {
  std::optional<float> f;
  std::optional<std::int64_t> i;
  std::optional<std::string> s;
  std::vector<float> floats;
  std::vector<std::int64_t> ints;
  std::optional<Tensor> tensor;
};

struct Node {
  std::string op_type;
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::unordered_map<std::string, Attribute> attributes;

  const Attribute* attr(const std::string& key) const {
    auto it = attributes.find(key);
    return it == attributes.end() ? nullptr : &it->second;
  }
  std::int64_t attr_int(const std::string& key, std::int64_t fallback) const {
    auto* a = attr(key);
    return a && a->i ? *a->i : fallback;
  }
  float attr_float(const std::string& key, float fallback) const {
    auto* a = attr(key);
    return a && a->f ? *a->f : fallback;
  }
  std::optional<std::vector<std::int64_t>> attr_ints(const std::string& key) const {
    auto* a = attr(key);
    if (!a) return std::nullopt;
    return a->ints;
  }
};

Node from_proto(const onnx::NodeProto& proto) {
  Node node;
  node.op_type = proto.op_type();
  node.name = proto.name();
  node.inputs.assign(proto.input().begin(), proto.input().end());
  node.outputs.assign(proto.output().begin(), proto.output().end());
  for (const auto& a : proto.attribute()) {
    Attribute attr;
    switch (a.type()) {
      case onnx::AttributeProto::FLOAT: attr.f = a.f(); break;
      case onnx::AttributeProto::INT: attr.i = a.i(); break;
      case onnx::AttributeProto::STRING: attr.s = a.s(); break;
      case onnx::AttributeProto::FLOATS: attr.floats.assign(a.floats().begin(), a.floats().end()); break;
      case onnx::AttributeProto::INTS: attr.ints.assign(a.ints().begin(), a.ints().end()); break;
      case onnx::AttributeProto::TENSOR: attr.tensor = from_proto(a.t()); break;
      default:
        // Untyped attributes from old exporters: infer from the populated field.
        if (a.has_f()) attr.f = a.f();
        if (a.has_i()) attr.i = a.i();
        if (a.has_t()) attr.tensor = from_proto(a.t());
        if (a.ints_size()) attr.ints.assign(a.ints().begin(), a.ints().end());
        if (a.floats_size()) attr.floats.assign(a.floats().begin(), a.floats().end());
        break;
    }
    node.attributes.emplace(a.name(), std::move(attr));
  }
  return node;
}

// ---------------------------------------------------------------------------
// Operators

struct Context {
  const Node& node;
  std::vector<const Tensor*> in;
  std::int64_t opset;

  bool has(std::size_t i) const { return i < in.size() && in[i] != nullptr; }
  const Tensor& at(std::size_t i) const {
    if (!has(i)) throw GraphError(node.op_type + ": missing input " + std::to_string(i));
    return *in[i];
  }
};

using OpFn = std::function<std::vector<Tensor>(const Context&)>;

template <class FloatFn>
Tensor unary_float(const Tensor& x, FloatFn fn) {
  const auto& v = values<float>(x);
  std::vector<float> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), fn);
  return Tensor::floats(x.shape(), std::move(out));
}

template <class Out, class In, class Fn>
Tensor binary_typed(const Tensor& a, const Tensor& b, std::string_view op, Fn fn) {
  const Shape out_shape = broadcast_shape(a.shape(), b.shape(), op);
  const auto& va = values<In>(a);
  const auto& vb = values<In>(b);
  std::vector<Out> out(element_count(out_shape));
  std::array<Shape, 2> strides{broadcast_strides(a.shape(), out_shape), broadcast_strides(b.shape(), out_shape)};
  for_each_broadcast<2>(out_shape, strides, [&](std::size_t i, const std::array<std::int64_t, 2>& off) {
    out[i] = static_cast<Out>(fn(va[static_cast<std::size_t>(off[0])], vb[static_cast<std::size_t>(off[1])]));
  });
  if constexpr (std::is_same_v<Out, float>) {
    return Tensor::floats(out_shape, std::move(out));
  } else if constexpr (std::is_same_v<Out, std::int64_t>) {
    return Tensor::ints(out_shape, std::move(out));
  } else {
    return Tensor::bools(out_shape, std::move(out));
  }
}

template <class Fn>
Tensor arithmetic(const Tensor& a, const Tensor& b, std::string_view op, Fn fn) {
  if (a.type() != b.type()) throw GraphError(std::string(op) + ": operand element types differ");
  if (a.type() == ElementType::float32) return binary_typed<float, float>(a, b, op, fn);
  if (a.type() == ElementType::int64) return binary_typed<std::int64_t, std::int64_t>(a, b, op, fn);
  throw GraphError(std::string(op) + ": boolean operands are not supported");
}

template <class Fn>
Tensor comparison(const Tensor& a, const Tensor& b, std::string_view op, Fn fn) {
  if (a.type() != b.type()) throw GraphError(std::string(op) + ": operand element types differ");
  switch (a.type()) {
    case ElementType::float32: return binary_typed<std::uint8_t, float>(a, b, op, fn);
    case ElementType::int64: return binary_typed<std::uint8_t, std::int64_t>(a, b, op, fn);
    default: return binary_typed<std::uint8_t, std::uint8_t>(a, b, op, fn);
  }
}

Tensor cast_to(const Tensor& x, std::int64_t to) {
  auto as_doubles = [&]() {
    return std::visit(
        [](const auto& v) {
          std::vector<double> d(v.size());
          std::transform(v.begin(), v.end(), d.begin(), [](auto e) { return static_cast<double>(e); });
          return d;
        },
        x.storage());
  };
  switch (to) {
    case onnx::TensorProto::FLOAT:
    case onnx::TensorProto::DOUBLE:
    case onnx::TensorProto::FLOAT16: {
      auto d = as_doubles();
      return Tensor::floats(x.shape(), std::vector<float>(d.begin(), d.end()));
    }
    case onnx::TensorProto::INT64:
    case onnx::TensorProto::INT32: {
      auto d = as_doubles();
      std::vector<std::int64_t> out(d.size());
      std::transform(d.begin(), d.end(), out.begin(), [](double e) { return static_cast<std::int64_t>(e); });
      return Tensor::ints(x.shape(), std::move(out));
    }
    case onnx::TensorProto::BOOL: {
      auto d = as_doubles();
      std::vector<std::uint8_t> out(d.size());
      std::transform(d.begin(), d.end(), out.begin(), [](double e) { return static_cast<std::uint8_t>(e != 0.0); });
      return Tensor::bools(x.shape(), std::move(out));
    }
    default:
      throw GraphError("Cast: unsupported target type " + std::to_string(to));
  }
}

Tensor matmul(const Tensor& a_in, const Tensor& b_in) {
  Shape a_shape = a_in.shape();
  Shape b_shape = b_in.shape();
  const bool a_vector = a_shape.size() == 1;
  const bool b_vector = b_shape.size() == 1;
  if (a_vector) a_shape.insert(a_shape.begin(), 1);
  if (b_vector) b_shape.push_back(1);
  if (a_shape.size() < 2 || b_shape.size() < 2) throw GraphError("MatMul: scalar operands");

  const std::int64_t m = a_shape[a_shape.size() - 2];
  const std::int64_t k = a_shape.back();
  const std::int64_t k2 = b_shape[b_shape.size() - 2];
  const std::int64_t n = b_shape.back();
  if (k != k2) {
    throw GraphError("MatMul: inner dimensions differ " + shape_string(a_in.shape()) + " x " +
                     shape_string(b_in.shape()));
  }

  Shape a_batch(a_shape.begin(), a_shape.end() - 2);
  Shape b_batch(b_shape.begin(), b_shape.end() - 2);
  Shape batch = broadcast_shape(a_batch, b_batch, "MatMul");
  const auto& va = values<float>(a_in);
  const auto& vb = values<float>(b_in);

  const std::size_t batch_count = element_count(batch);
  std::vector<float> out(batch_count * static_cast<std::size_t>(m * n), 0.0f);
  std::array<Shape, 2> strides{broadcast_strides(a_batch, batch), broadcast_strides(b_batch, batch)};
  // Batch strides are in units of whole matrices.
  for_each_broadcast<2>(batch, strides, [&](std::size_t bi, const std::array<std::int64_t, 2>& off) {
    const float* pa = va.data() + off[0] * m * k;
    const float* pb = vb.data() + off[1] * k * n;
    float* po = out.data() + bi * static_cast<std::size_t>(m * n);
    for (std::int64_t i = 0; i < m; ++i) {
      for (std::int64_t p = 0; p < k; ++p) {
        const float av = pa[i * k + p];
        const float* brow = pb + p * n;
        float* orow = po + i * n;
        for (std::int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    }
  });
  Shape out_shape = batch;
  if (!a_vector) out_shape.push_back(m);
  if (!b_vector) out_shape.push_back(n);
  return Tensor::floats(std::move(out_shape), std::move(out));
}

Tensor gemm(const Context& c) {
  const Tensor& a = c.at(0);
  const Tensor& b = c.at(1);
  if (a.rank() != 2 || b.rank() != 2) throw GraphError("Gemm: operands must be 2-D");
  const bool ta = c.node.attr_int("transA", 0) != 0;
  const bool tb = c.node.attr_int("transB", 0) != 0;
  const float alpha = c.node.attr_float("alpha", 1.0f);
  const float beta = c.node.attr_float("beta", 1.0f);

  const std::int64_t m = ta ? a.shape()[1] : a.shape()[0];
  const std::int64_t k = ta ? a.shape()[0] : a.shape()[1];
  const std::int64_t kb = tb ? b.shape()[1] : b.shape()[0];
  const std::int64_t n = tb ? b.shape()[0] : b.shape()[1];
  if (k != kb) throw GraphError("Gemm: inner dimensions differ");

  const auto& va = values<float>(a);
  const auto& vb = values<float>(b);
  auto a_at = [&](std::int64_t i, std::int64_t p) { return ta ? va[p * m + i] : va[i * k + p]; };
  auto b_at = [&](std::int64_t p, std::int64_t j) { return tb ? vb[j * k + p] : vb[p * n + j]; };

  std::vector<float> out(static_cast<std::size_t>(m * n));
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      float acc = 0.0f;
      for (std::int64_t p = 0; p < k; ++p) acc += a_at(i, p) * b_at(p, j);
      out[i * n + j] = alpha * acc;
    }
  }
  Tensor result = Tensor::floats({m, n}, std::move(out));
  if (c.has(2)) {
    Tensor scaled_c = beta == 1.0f ? c.at(2) : unary_float(c.at(2), [beta](float x) { return beta * x; });
    result = arithmetic(result, scaled_c, "Gemm", std::plus<>());
    if (result.shape() != Shape{m, n}) throw GraphError("Gemm: bias does not broadcast to the output");
  }
  return result;
}

// Softmax over a trailing block: [outer, inner] with normalization along `inner`
// (opset < 13) or along a single axis (opset >= 13).
Tensor softmax(const Context& c) {
  const Tensor& x = c.at(0);
  const auto& v = values<float>(x);
  std::vector<float> out(v.size());
  const Shape& shape = x.shape();

  std::size_t outer = 1, axis_len = 1, inner = 1;
  if (c.opset >= 13) {
    const auto axis = static_cast<std::size_t>(normalize_axis(c.node.attr_int("axis", -1), shape.size(), "Softmax"));
    for (std::size_t i = 0; i < axis; ++i) outer *= static_cast<std::size_t>(shape[i]);
    axis_len = static_cast<std::size_t>(shape[axis]);
    for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= static_cast<std::size_t>(shape[i]);
  } else {
    const auto axis = static_cast<std::size_t>(normalize_axis(c.node.attr_int("axis", 1), shape.size(), "Softmax"));
    for (std::size_t i = 0; i < axis; ++i) outer *= static_cast<std::size_t>(shape[i]);
    for (std::size_t i = axis; i < shape.size(); ++i) axis_len *= static_cast<std::size_t>(shape[i]);
  }

  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      auto idx = [&](std::size_t a) { return (o * axis_len + a) * inner + in; };
      float max_v = -std::numeric_limits<float>::infinity();
      for (std::size_t a = 0; a < axis_len; ++a) max_v = std::max(max_v, v[idx(a)]);
      double total = 0.0;
      for (std::size_t a = 0; a < axis_len; ++a) total += std::exp(static_cast<double>(v[idx(a)] - max_v));
      for (std::size_t a = 0; a < axis_len; ++a) {
        out[idx(a)] = static_cast<float>(std::exp(static_cast<double>(v[idx(a)] - max_v)) / total);
      }
    }
  }
  return Tensor::floats(shape, std::move(out));
}

std::vector<std::int64_t> reduce_axes(const Context& c, bool axes_as_input) {
  if (axes_as_input && c.has(1)) return to_int_vector(c.at(1));
  if (auto attr = c.node.attr_ints("axes")) return *attr;
  return {};
}

enum class Reduction { sum, mean, max };

Tensor reduce(const Context& c, Reduction kind, bool axes_as_input) {
  const Tensor& x = c.at(0);
  const Shape& shape = x.shape();
  auto axes = reduce_axes(c, axes_as_input);
  const bool keepdims = c.node.attr_int("keepdims", 1) != 0;
  if (axes.empty()) {
    if (c.node.attr_int("noop_with_empty_axes", 0) != 0) return x;
    axes.resize(shape.size());
    std::iota(axes.begin(), axes.end(), 0);
  }
  std::vector<bool> reduced(shape.size(), false);
  for (auto a : axes) reduced[static_cast<std::size_t>(normalize_axis(a, shape.size(), c.node.op_type))] = true;

  Shape kept_shape(shape.size());
  for (std::size_t d = 0; d < shape.size(); ++d) kept_shape[d] = reduced[d] ? 1 : shape[d];
  Shape out_shape;
  for (std::size_t d = 0; d < shape.size(); ++d) {
    if (!reduced[d] || keepdims) out_shape.push_back(kept_shape[d]);
  }

  const Shape out_strides = broadcast_strides(kept_shape, shape);
  const std::size_t out_count = element_count(kept_shape);
  const std::size_t group = out_count ? element_count(shape) / out_count : 0;

  auto run = [&](const auto& v, auto init) {
    using T = std::decay_t<decltype(init)>;
    std::vector<T> acc(out_count, init);
    std::array<Shape, 1> strides{out_strides};
    for_each_broadcast<1>(shape, strides, [&](std::size_t i, const std::array<std::int64_t, 1>& off) {
      auto& slot = acc[static_cast<std::size_t>(off[0])];
      if (kind == Reduction::max) {
        slot = std::max<T>(slot, static_cast<T>(v[i]));
      } else {
        slot += static_cast<T>(v[i]);
      }
    });
    if (kind == Reduction::mean && group > 0) {
      for (auto& a : acc) a /= static_cast<T>(group);
    }
    return acc;
  };

  if (x.type() == ElementType::float32) {
    const float init = kind == Reduction::max ? -std::numeric_limits<float>::infinity() : 0.0f;
    auto acc = run(values<float>(x), double{init});
    return Tensor::floats(std::move(out_shape), std::vector<float>(acc.begin(), acc.end()));
  }
  if (x.type() == ElementType::int64) {
    const std::int64_t init = kind == Reduction::max ? std::numeric_limits<std::int64_t>::min() : 0;
    return Tensor::ints(std::move(out_shape), run(values<std::int64_t>(x), init));
  }
  throw GraphError(c.node.op_type + ": boolean input not supported");
}

Tensor layer_norm(const Context& c) {
  const Tensor& x = c.at(0);
  const Shape& shape = x.shape();
  const auto axis = static_cast<std::size_t>(normalize_axis(c.node.attr_int("axis", -1), shape.size(), "LayerNormalization"));
  const float eps = c.node.attr_float("epsilon", 1e-5f);
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= static_cast<std::size_t>(shape[i]);
  for (std::size_t i = axis; i < shape.size(); ++i) inner *= static_cast<std::size_t>(shape[i]);

  const auto& v = values<float>(x);
  std::vector<float> normalized(v.size());
  for (std::size_t o = 0; o < outer; ++o) {
    const float* row = v.data() + o * inner;
    double mean = 0.0;
    for (std::size_t i = 0; i < inner; ++i) mean += row[i];
    mean /= static_cast<double>(inner);
    double var = 0.0;
    for (std::size_t i = 0; i < inner; ++i) var += (row[i] - mean) * (row[i] - mean);
    var /= static_cast<double>(inner);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < inner; ++i) normalized[o * inner + i] = static_cast<float>((row[i] - mean) * inv);
  }
  Tensor y = Tensor::floats(shape, std::move(normalized));
  y = arithmetic(y, c.at(1), "LayerNormalization", std::multiplies<>());
  if (c.has(2)) y = arithmetic(y, c.at(2), "LayerNormalization", std::plus<>());
  return y;
}

Tensor gather(const Context& c) {
  const Tensor& data = c.at(0);
  const Tensor& indices = c.at(1);
  const Shape& ds = data.shape();
  const auto axis = static_cast<std::size_t>(normalize_axis(c.node.attr_int("axis", 0), ds.size(), "Gather"));
  const auto idx = to_int_vector(indices);
  const std::int64_t axis_len = ds[axis];

  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= static_cast<std::size_t>(ds[i]);
  for (std::size_t i = axis + 1; i < ds.size(); ++i) inner *= static_cast<std::size_t>(ds[i]);

  std::vector<std::size_t> resolved(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::int64_t j = idx[i] < 0 ? idx[i] + axis_len : idx[i];
    if (j < 0 || j >= axis_len) {
      throw GraphError("Gather: index " + std::to_string(idx[i]) + " out of range [0," + std::to_string(axis_len) + ")");
    }
    resolved[i] = static_cast<std::size_t>(j);
  }

  Shape out_shape(ds.begin(), ds.begin() + static_cast<std::ptrdiff_t>(axis));
  out_shape.insert(out_shape.end(), indices.shape().begin(), indices.shape().end());
  out_shape.insert(out_shape.end(), ds.begin() + static_cast<std::ptrdiff_t>(axis) + 1, ds.end());
  const std::size_t count = outer * resolved.size() * inner;
  return gather_like(data, std::move(out_shape), count, [&](std::size_t i) {
    const std::size_t in = i % inner;
    const std::size_t rest = i / inner;
    const std::size_t k = rest % resolved.size();
    const std::size_t o = rest / resolved.size();
    return (o * static_cast<std::size_t>(axis_len) + resolved[k]) * inner + in;
  });
}

Tensor transpose(const Context& c) {
  const Tensor& x = c.at(0);
  const Shape& shape = x.shape();
  std::vector<std::int64_t> perm = c.node.attr_ints("perm").value_or(std::vector<std::int64_t>{});
  if (perm.empty()) {
    perm.resize(shape.size());
    std::iota(perm.rbegin(), perm.rend(), 0);
  }
  if (perm.size() != shape.size()) throw GraphError("Transpose: perm length does not match rank");
  Shape out_shape(shape.size());
  const Shape in_strides = strides_of(shape);
  Shape strides(shape.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out_shape[i] = shape[static_cast<std::size_t>(perm[i])];
    strides[i] = in_strides[static_cast<std::size_t>(perm[i])];
  }
  std::vector<std::size_t> source(element_count(out_shape));
  std::array<Shape, 1> s{strides};
  for_each_broadcast<1>(out_shape, s, [&](std::size_t i, const std::array<std::int64_t, 1>& off) {
    source[i] = static_cast<std::size_t>(off[0]);
  });
  return gather_like(x, out_shape, source.size(), [&](std::size_t i) { return source[i]; });
}

Tensor concat(const Context& c) {
  std::vector<const Tensor*> parts;
  for (std::size_t i = 0; i < c.in.size(); ++i) {
    if (c.has(i)) parts.push_back(c.in[i]);
  }
  if (parts.empty()) throw GraphError("Concat: no inputs");
  const Shape& first = parts.front()->shape();
  const auto axis = static_cast<std::size_t>(normalize_axis(c.node.attr_int("axis", 0), first.size(), "Concat"));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor* p : parts) {
    if (p->rank() != first.size() || p->type() != parts.front()->type()) throw GraphError("Concat: incompatible inputs");
    out_shape[axis] += p->shape()[axis];
  }
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= static_cast<std::size_t>(first[i]);

  return std::visit(
      [&](const auto& proto_storage) -> Tensor {
        using V = std::decay_t<decltype(proto_storage)>;
        V out;
        out.reserve(element_count(out_shape));
        for (std::size_t o = 0; o < outer; ++o) {
          for (const Tensor* p : parts) {
            const auto& v = std::get<V>(p->storage());
            const std::size_t block = v.size() / outer;
            out.insert(out.end(), v.begin() + static_cast<std::ptrdiff_t>(o * block),
                       v.begin() + static_cast<std::ptrdiff_t>((o + 1) * block));
          }
        }
        if constexpr (std::is_same_v<V, std::vector<float>>) return Tensor::floats(out_shape, std::move(out));
        else if constexpr (std::is_same_v<V, std::vector<std::int64_t>>) return Tensor::ints(out_shape, std::move(out));
        else return Tensor::bools(out_shape, std::move(out));
      },
      parts.front()->storage());
}

Tensor reshape(const Context& c) {
  const Tensor& x = c.at(0);
  auto target = to_int_vector(c.at(1));
  const bool allow_zero = c.node.attr_int("allowzero", 0) != 0;
  std::int64_t known = 1;
  int infer = -1;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] == 0 && !allow_zero) {
      if (i >= x.rank()) throw GraphError("Reshape: 0 refers past the input rank");
      target[i] = x.shape()[i];
    }
    if (target[i] == -1) {
      if (infer >= 0) throw GraphError("Reshape: more than one -1");
      infer = static_cast<int>(i);
    } else {
      known *= target[i];
    }
  }
  const auto total = static_cast<std::int64_t>(x.size());
  if (infer >= 0) {
    if (known == 0 || total % known != 0) throw GraphError("Reshape: cannot infer dimension");
    target[static_cast<std::size_t>(infer)] = total / known;
  }
  return x.reshaped(std::move(target));
}

Tensor unsqueeze(const Context& c) {
  const Tensor& x = c.at(0);
  auto axes = c.has(1) ? to_int_vector(c.at(1)) : c.node.attr_ints("axes").value_or(std::vector<std::int64_t>{});
  const std::size_t out_rank = x.rank() + axes.size();
  for (auto& a : axes) a = normalize_axis(a, out_rank, "Unsqueeze");
  std::sort(axes.begin(), axes.end());
  Shape out;
  std::size_t src = 0;
  for (std::size_t d = 0; d < out_rank; ++d) {
    if (std::binary_search(axes.begin(), axes.end(), static_cast<std::int64_t>(d))) {
      out.push_back(1);
    } else {
      out.push_back(x.shape()[src++]);
    }
  }
  return x.reshaped(std::move(out));
}

Tensor squeeze(const Context& c) {
  const Tensor& x = c.at(0);
  auto axes = c.has(1) ? to_int_vector(c.at(1)) : c.node.attr_ints("axes").value_or(std::vector<std::int64_t>{});
  for (auto& a : axes) a = normalize_axis(a, x.rank(), "Squeeze");
  Shape out;
  for (std::size_t d = 0; d < x.rank(); ++d) {
    const bool listed = std::find(axes.begin(), axes.end(), static_cast<std::int64_t>(d)) != axes.end();
    if (axes.empty() ? x.shape()[d] == 1 : listed) {
      if (x.shape()[d] != 1) throw GraphError("Squeeze: dimension is not 1");
      continue;
    }
    out.push_back(x.shape()[d]);
  }
  return x.reshaped(std::move(out));
}

Tensor flatten(const Context& c) {
  const Tensor& x = c.at(0);
  const auto r = static_cast<std::int64_t>(x.rank());
  std::int64_t axis = c.node.attr_int("axis", 1);
  if (axis < 0) axis += r;
  if (axis < 0 || axis > r) throw GraphError("Flatten: axis out of range");
  std::int64_t outer = 1;
  for (std::int64_t i = 0; i < axis; ++i) outer *= x.shape()[static_cast<std::size_t>(i)];
  const auto total = static_cast<std::int64_t>(x.size());
  return x.reshaped({outer, outer ? total / outer : 0});
}

Tensor expand(const Context& c) {
  const Tensor& x = c.at(0);
  const Shape target = to_int_vector(c.at(1));
  const Shape out_shape = broadcast_shape(x.shape(), target, "Expand");
  std::vector<std::size_t> source(element_count(out_shape));
  std::array<Shape, 1> s{broadcast_strides(x.shape(), out_shape)};
  for_each_broadcast<1>(out_shape, s, [&](std::size_t i, const std::array<std::int64_t, 1>& off) {
    source[i] = static_cast<std::size_t>(off[0]);
  });
  return gather_like(x, out_shape, source.size(), [&](std::size_t i) { return source[i]; });
}

Tensor slice(const Context& c) {
  const Tensor& x = c.at(0);
  const Shape& shape = x.shape();
  std::vector<std::int64_t> starts, ends, axes, steps;
  if (c.opset < 10) {
    starts = c.node.attr_ints("starts").value_or(std::vector<std::int64_t>{});
    ends = c.node.attr_ints("ends").value_or(std::vector<std::int64_t>{});
    axes = c.node.attr_ints("axes").value_or(std::vector<std::int64_t>{});
  } else {
    starts = to_int_vector(c.at(1));
    ends = to_int_vector(c.at(2));
    if (c.has(3)) axes = to_int_vector(c.at(3));
    if (c.has(4)) steps = to_int_vector(c.at(4));
  }
  if (axes.empty()) {
    axes.resize(starts.size());
    std::iota(axes.begin(), axes.end(), 0);
  }
  if (steps.empty()) steps.assign(starts.size(), 1);
  if (ends.size() != starts.size() || axes.size() != starts.size() || steps.size() != starts.size()) {
    throw GraphError("Slice: starts/ends/axes/steps lengths differ");
  }

  Shape begin(shape.size(), 0), step(shape.size(), 1), out_shape = shape;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const auto d = static_cast<std::size_t>(normalize_axis(axes[i], shape.size(), "Slice"));
    const std::int64_t dim = shape[d];
    const std::int64_t st = steps[i];
    if (st == 0) throw GraphError("Slice: zero step");
    std::int64_t s0 = starts[i] < 0 ? starts[i] + dim : starts[i];
    std::int64_t e0 = ends[i] < 0 ? ends[i] + dim : ends[i];
    if (st > 0) {
      s0 = std::clamp<std::int64_t>(s0, 0, dim);
      e0 = std::clamp<std::int64_t>(e0, 0, dim);
    } else {
      s0 = std::clamp<std::int64_t>(s0, 0, dim - 1);
      e0 = std::clamp<std::int64_t>(e0, -1, dim - 1);
    }
    const std::int64_t len = st > 0 ? std::max<std::int64_t>(0, (e0 - s0 + st - 1) / st)
                                    : std::max<std::int64_t>(0, (s0 - e0 - st - 1) / (-st));
    begin[d] = s0;
    step[d] = st;
    out_shape[d] = len;
  }

  const Shape in_strides = strides_of(shape);
  Shape strides(shape.size());
  std::int64_t base = 0;
  for (std::size_t d = 0; d < shape.size(); ++d) {
    strides[d] = in_strides[d] * step[d];
    base += begin[d] * in_strides[d];
  }
  std::vector<std::size_t> source(element_count(out_shape));
  std::array<Shape, 1> s{strides};
  for_each_broadcast<1>(out_shape, s, [&](std::size_t i, const std::array<std::int64_t, 1>& off) {
    source[i] = static_cast<std::size_t>(base + off[0]);
  });
  return gather_like(x, out_shape, source.size(), [&](std::size_t i) { return source[i]; });
}

Tensor where(const Context& c) {
  const Tensor& cond = c.at(0);
  const Tensor& x = c.at(1);
  const Tensor& y = c.at(2);
  if (x.type() != y.type()) throw GraphError("Where: branch element types differ");
  Shape out_shape = broadcast_shape(broadcast_shape(cond.shape(), x.shape(), "Where"), y.shape(), "Where");
  std::array<Shape, 3> strides{broadcast_strides(cond.shape(), out_shape), broadcast_strides(x.shape(), out_shape),
                               broadcast_strides(y.shape(), out_shape)};
  const auto& vc = values<std::uint8_t>(cond);
  std::vector<std::size_t> from_x(element_count(out_shape));
  std::vector<std::size_t> offset(from_x.size());
  for_each_broadcast<3>(out_shape, strides, [&](std::size_t i, const std::array<std::int64_t, 3>& off) {
    from_x[i] = vc[static_cast<std::size_t>(off[0])] != 0;
    offset[i] = static_cast<std::size_t>(from_x[i] ? off[1] : off[2]);
  });
  return std::visit(
      [&](const auto& xs) -> Tensor {
        using V = std::decay_t<decltype(xs)>;
        const auto& ys = std::get<V>(y.storage());
        V out(from_x.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = from_x[i] ? xs[offset[i]] : ys[offset[i]];
        if constexpr (std::is_same_v<V, std::vector<float>>) return Tensor::floats(out_shape, std::move(out));
        else if constexpr (std::is_same_v<V, std::vector<std::int64_t>>) return Tensor::ints(out_shape, std::move(out));
        else return Tensor::bools(out_shape, std::move(out));
      },
      x.storage());
}

Tensor constant_tensor(const Node& node) {
  if (auto* a = node.attr("value"); a && a->tensor) return *a->tensor;
  if (auto* a = node.attr("value_float"); a && a->f) return Tensor::floats({}, {*a->f});
  if (auto* a = node.attr("value_int"); a && a->i) return Tensor::ints({}, {*a->i});
  if (auto* a = node.attr("value_floats")) {
    return Tensor::floats({static_cast<std::int64_t>(a->floats.size())}, a->floats);
  }
  if (auto* a = node.attr("value_ints")) {
    return Tensor::ints({static_cast<std::int64_t>(a->ints.size())}, a->ints);
  }
  throw GraphError("Constant: no supported value attribute");
}

Tensor clip(const Context& c) {
  const Tensor& x = c.at(0);
  float lo = -std::numeric_limits<float>::infinity();
  float hi = std::numeric_limits<float>::infinity();
  if (c.opset < 11) {
    lo = c.node.attr_float("min", lo);
    hi = c.node.attr_float("max", hi);
  } else {
    if (c.has(1)) lo = values<float>(c.at(1)).at(0);
    if (c.has(2)) hi = values<float>(c.at(2)).at(0);
  }
  return unary_float(x, [lo, hi](float v) { return std::min(std::max(v, lo), hi); });
}

template <class Fn>
Tensor variadic(const Context& c, std::string_view op, Fn fn) {
  std::optional<Tensor> acc;
  for (std::size_t i = 0; i < c.in.size(); ++i) {
    if (!c.has(i)) continue;
    acc = acc ? arithmetic(*acc, c.at(i), op, fn) : c.at(i);
  }
  if (!acc) throw GraphError(std::string(op) + ": no inputs");
  return *acc;
}

const std::unordered_map<std::string, OpFn>& operators() {
  static const std::unordered_map<std::string, OpFn> table = [] {
    std::unordered_map<std::string, OpFn> ops;
    auto one = [](auto fn) { return OpFn([fn](const Context& c) { return std::vector<Tensor>{fn(c)}; }); };

    ops["Identity"] = one([](const Context& c) { return c.at(0); });
    ops["Dropout"] = one([](const Context& c) { return c.at(0); });
    ops["Constant"] = one([](const Context& c) { return constant_tensor(c.node); });
    ops["Cast"] = one([](const Context& c) { return cast_to(c.at(0), c.node.attr_int("to", onnx::TensorProto::FLOAT)); });
    ops["Shape"] = one([](const Context& c) {
      const Shape& s = c.at(0).shape();
      const auto r = static_cast<std::int64_t>(s.size());
      std::int64_t start = c.node.attr_int("start", 0);
      std::int64_t end = c.node.attr_int("end", r);
      if (start < 0) start += r;
      if (end < 0) end += r;
      start = std::clamp<std::int64_t>(start, 0, r);
      end = std::clamp<std::int64_t>(end, start, r);
      std::vector<std::int64_t> dims(s.begin() + start, s.begin() + end);
      return Tensor::ints({end - start}, std::move(dims));
    });
    ops["ConstantOfShape"] = one([](const Context& c) {
      Shape shape = to_int_vector(c.at(0));
      const std::size_t n = element_count(shape);
      if (auto* a = c.node.attr("value"); a && a->tensor) {
        const Tensor& v = *a->tensor;
        if (v.type() == ElementType::int64) return Tensor::ints(shape, std::vector<std::int64_t>(n, v.i64()[0]));
        if (v.type() == ElementType::boolean) return Tensor::bools(shape, std::vector<std::uint8_t>(n, v.b8()[0]));
        return Tensor::floats(shape, std::vector<float>(n, v.f32()[0]));
      }
      return Tensor::floats(shape, std::vector<float>(n, 0.0f));
    });

    ops["Gather"] = one(gather);
    ops["Unsqueeze"] = one(unsqueeze);
    ops["Squeeze"] = one(squeeze);
    ops["Reshape"] = one(reshape);
    ops["Flatten"] = one(flatten);
    ops["Transpose"] = one(transpose);
    ops["Concat"] = one(concat);
    ops["Expand"] = one(expand);
    ops["Slice"] = one(slice);
    ops["Where"] = one(where);

    ops["MatMul"] = one([](const Context& c) { return matmul(c.at(0), c.at(1)); });
    ops["Gemm"] = one(gemm);
    ops["Softmax"] = one(softmax);
    ops["LayerNormalization"] = one(layer_norm);
    ops["ReduceSum"] = one([](const Context& c) { return reduce(c, Reduction::sum, c.opset >= 13); });
    ops["ReduceMean"] = one([](const Context& c) { return reduce(c, Reduction::mean, c.opset >= 18); });
    ops["ReduceMax"] = one([](const Context& c) { return reduce(c, Reduction::max, c.opset >= 18); });

    ops["Add"] = one([](const Context& c) { return arithmetic(c.at(0), c.at(1), "Add", std::plus<>()); });
    ops["Sub"] = one([](const Context& c) { return arithmetic(c.at(0), c.at(1), "Sub", std::minus<>()); });
    ops["Mul"] = one([](const Context& c) { return arithmetic(c.at(0), c.at(1), "Mul", std::multiplies<>()); });
    ops["Div"] = one([](const Context& c) {
      if (c.at(0).type() == ElementType::int64) {
        return arithmetic(c.at(0), c.at(1), "Div", [](std::int64_t a, std::int64_t b) {
          if (b == 0) throw GraphError("Div: integer division by zero");
          return a / b;
        });
      }
      return arithmetic(c.at(0), c.at(1), "Div", std::divides<>());
    });
    ops["Pow"] = one([](const Context& c) {
      Tensor exponent = c.at(1).type() == c.at(0).type() ? c.at(1) : cast_to(c.at(1), onnx::TensorProto::FLOAT);
      return arithmetic(c.at(0), exponent, "Pow", [](auto a, auto b) { return std::pow(a, b); });
    });
    ops["Max"] = one([](const Context& c) { return variadic(c, "Max", [](auto a, auto b) { return std::max(a, b); }); });
    ops["Min"] = one([](const Context& c) { return variadic(c, "Min", [](auto a, auto b) { return std::min(a, b); }); });
    ops["Sum"] = one([](const Context& c) { return variadic(c, "Sum", std::plus<>()); });
    ops["Equal"] = one([](const Context& c) { return comparison(c.at(0), c.at(1), "Equal", std::equal_to<>()); });
    ops["Less"] = one([](const Context& c) { return comparison(c.at(0), c.at(1), "Less", std::less<>()); });
    ops["Greater"] = one([](const Context& c) { return comparison(c.at(0), c.at(1), "Greater", std::greater<>()); });
    ops["Not"] = one([](const Context& c) {
      auto v = c.at(0).b8();
      std::vector<std::uint8_t> out(v.size());
      std::transform(v.begin(), v.end(), out.begin(), [](std::uint8_t b) { return static_cast<std::uint8_t>(!b); });
      return Tensor::bools(c.at(0).shape(), std::move(out));
    });

    ops["Relu"] = one([](const Context& c) { return unary_float(c.at(0), [](float x) { return x > 0.0f ? x : 0.0f; }); });
    ops["Tanh"] = one([](const Context& c) { return unary_float(c.at(0), [](float x) { return std::tanh(x); }); });
    ops["Sigmoid"] = one([](const Context& c) {
      return unary_float(c.at(0), [](float x) { return 1.0f / (1.0f + std::exp(-x)); });
    });
    ops["Erf"] = one([](const Context& c) { return unary_float(c.at(0), [](float x) { return std::erf(x); }); });
    ops["Sqrt"] = one([](const Context& c) { return unary_float(c.at(0), [](float x) { return std::sqrt(x); }); });
    ops["Exp"] = one([](const Context& c) { return unary_float(c.at(0), [](float x) { return std::exp(x); }); });
    ops["Log"] = one([](const Context& c) { return unary_float(c.at(0), [](float x) { return std::log(x); }); });
    ops["Reciprocal"] = one([](const Context& c) { return unary_float(c.at(0), [](float x) { return 1.0f / x; }); });
    ops["Neg"] = one([](const Context& c) {
      if (c.at(0).type() == ElementType::int64) {
        auto v = c.at(0).i64();
        std::vector<std::int64_t> out(v.size());
        std::transform(v.begin(), v.end(), out.begin(), std::negate<>());
        return Tensor::ints(c.at(0).shape(), std::move(out));
      }
      return unary_float(c.at(0), std::negate<>());
    });
    ops["Abs"] = one([](const Context& c) { return unary_float(c.at(0), [](float x) { return std::fabs(x); }); });
    ops["Clip"] = one(clip);
    return ops;
  }();
  return table;
}

}  // namespace

// ---------------------------------------------------------------------------
// OnnxGraph

struct OnnxGraph::Impl {
  std::int64_t opset = 1;
  std::vector<Node> nodes;
  std::unordered_map<std::string, Tensor> initializers;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

OnnxGraph::OnnxGraph(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
OnnxGraph::OnnxGraph(OnnxGraph&&) noexcept = default;
OnnxGraph& OnnxGraph::operator=(OnnxGraph&&) noexcept = default;
OnnxGraph::~OnnxGraph() = default;

OnnxGraph OnnxGraph::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GraphError("cannot open model file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(bytes);
}

OnnxGraph OnnxGraph::parse(std::string_view serialized_model) {
  onnx::ModelProto model;
  if (!model.ParseFromArray(serialized_model.data(), static_cast<int>(serialized_model.size()))) {
    throw GraphError("model file is not a valid ONNX protobuf");
  }
  if (!model.has_graph()) throw GraphError("ONNX model has no graph");

  auto impl = std::make_unique<Impl>();
  for (const auto& opset : model.opset_import()) {
    if (opset.domain().empty() || opset.domain() == "ai.onnx") impl->opset = opset.version();
  }

  const auto& graph = model.graph();
  for (const auto& init : graph.initializer()) impl->initializers.emplace(init.name(), from_proto(init));
  for (const auto& input : graph.input()) {
    if (!impl->initializers.count(input.name())) impl->inputs.push_back(input.name());
  }
  for (const auto& output : graph.output()) impl->outputs.push_back(output.name());

  for (const auto& node_proto : graph.node()) {
    if (!node_proto.domain().empty() && node_proto.domain() != "ai.onnx") {
      throw GraphError("unsupported operator domain '" + node_proto.domain() + "' (node '" + node_proto.name() + "')");
    }
    if (!supports(node_proto.op_type())) {
      throw GraphError("unsupported operator '" + node_proto.op_type() + "' (node '" + node_proto.name() + "')");
    }
    impl->nodes.push_back(from_proto(node_proto));
  }
  if (impl->outputs.empty()) throw GraphError("ONNX graph declares no outputs");
  return OnnxGraph(std::move(impl));
}

const std::vector<std::string>& OnnxGraph::input_names() const { return impl_->inputs; }
const std::vector<std::string>& OnnxGraph::output_names() const { return impl_->outputs; }
std::int64_t OnnxGraph::opset() const { return impl_->opset; }

bool OnnxGraph::supports(std::string_view op_type) { return operators().count(std::string(op_type)) > 0; }

std::vector<Tensor> OnnxGraph::run(const std::map<std::string, Tensor>& feeds) const {
  std::unordered_map<std::string, Tensor> locals;
  auto lookup = [&](const std::string& name) -> const Tensor* {
    if (name.empty()) return nullptr;
    if (auto it = locals.find(name); it != locals.end()) return &it->second;
    if (auto it = feeds.find(name); it != feeds.end()) return &it->second;
    if (auto it = impl_->initializers.find(name); it != impl_->initializers.end()) return &it->second;
    throw GraphError("value '" + name + "' is used before it is produced");
  };

  for (const auto& name : impl_->inputs) {
    if (!feeds.count(name)) throw GraphError("missing graph input '" + name + "'");
  }

  const auto& ops = operators();
  for (const Node& node : impl_->nodes) {
    Context ctx{node, {}, impl_->opset};
    ctx.in.reserve(node.inputs.size());
    for (const auto& name : node.inputs) ctx.in.push_back(lookup(name));
    std::vector<Tensor> produced;
    try {
      produced = ops.at(node.op_type)(ctx);
    } catch (const GraphError& e) {
      throw GraphError("node '" + node.name + "' (" + node.op_type + "): " + e.what());
    }
    for (std::size_t i = 0; i < produced.size() && i < node.outputs.size(); ++i) {
      if (!node.outputs[i].empty()) locals.insert_or_assign(node.outputs[i], std::move(produced[i]));
    }
  }

  std::vector<Tensor> results;
  results.reserve(impl_->outputs.size());
  for (const auto& name : impl_->outputs) results.push_back(*lookup(name));
  return results;
}

}  // namespace bident::inference
