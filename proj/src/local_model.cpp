#include <fstream>
#include <map>
#include <set>

#include "bident/error.hpp"
#include "bident/onnx_graph.hpp"
#include "bident/scoring.hpp"
#include "bident/tokenizer.hpp"

namespace bident {

using inference::OnnxGraph;
using inference::Tensor;

ModelSidecar parse_sidecar(const nlohmann::json& j) {
  ModelSidecar s;
  s.task = parse_task(j.at("task").get<std::string>());
  s.class_names = j.at("class_names").get<std::vector<std::string>>();
  s.tokenizer_id = j.at("tokenizer_id").get<std::string>();
  s.max_sequence_length = j.at("max_sequence_length").get<std::size_t>();
  s.model_id = j.value("model_id", std::string{});

  const auto expected = class_names(s.task);
  std::set<std::string> given(s.class_names.begin(), s.class_names.end());
  std::set<std::string> wanted(expected.begin(), expected.end());
  if (given != wanted || s.class_names.size() != expected.size()) {
    throw ConfigError("sidecar class_names do not match the classes of task " + std::string(to_string(s.task)));
  }
  if (s.max_sequence_length < 3) throw ConfigError("sidecar max_sequence_length must be at least 3");
  return s;
}

ModelSidecar load_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model sidecar " + path.string());
  try {
    return parse_sidecar(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad model sidecar " + path.string() + ": " + e.what());
  }
}

std::filesystem::path sidecar_path_for(const std::filesystem::path& model_path) {
  auto p = model_path;
  p.replace_extension(".json");
  return p;
}

struct LocalModelScorer::State {
  ModelSidecar sidecar;
  OnnxGraph graph;
  PairTokenizer tokenizer;
};

namespace {

ScorerDescriptor describe(const ModelSidecar& sidecar, const std::filesystem::path& model_path) {
  return ScorerDescriptor{sidecar.task, Backend::local_model,
                          sidecar.model_id.empty() ? model_path.filename().string() : sidecar.model_id,
                          sidecar.max_sequence_length};
}

std::unique_ptr<LocalModelScorer::State> load_state(const std::filesystem::path& model_path,
                                                    ModelSidecar sidecar) {
  try {
    auto graph = OnnxGraph::load(model_path);
    auto tokenizer = PairTokenizer::from_id(sidecar.tokenizer_id);
    for (const auto& name : graph.input_names()) {
      if (name != "input_ids" && name != "attention_mask" && name != "token_type_ids") {
        throw ConfigError("model input '" + name + "' is not one of input_ids, attention_mask, token_type_ids");
      }
    }
    return std::make_unique<LocalModelScorer::State>(
        LocalModelScorer::State{std::move(sidecar), std::move(graph), std::move(tokenizer)});
  } catch (const Error& e) {
    throw ScoringError(ScoringError::Kind::model_load, "cannot load model " + model_path.string() + ": " + e.what());
  }
}

ModelSidecar sidecar_or_throw(const std::filesystem::path& model_path) {
  try {
    return load_sidecar(sidecar_path_for(model_path));
  } catch (const Error& e) {
    throw ScoringError(ScoringError::Kind::model_load, e.what());
  }
}

}  // namespace

LocalModelScorer::LocalModelScorer(const std::filesystem::path& model_path)
    : LocalModelScorer(model_path, sidecar_or_throw(model_path)) {}

LocalModelScorer::LocalModelScorer(const std::filesystem::path& model_path, ModelSidecar sidecar)
    : Scorer(describe(sidecar, model_path)), state_(load_state(model_path, std::move(sidecar))) {}

LocalModelScorer::~LocalModelScorer() = default;

const ModelSidecar& LocalModelScorer::sidecar() const { return state_->sidecar; }

std::vector<LabelDistribution> LocalModelScorer::do_score(std::span<const SequencePair> pairs) {
  const std::size_t length = state_->sidecar.max_sequence_length;
  const auto batch = static_cast<std::int64_t>(pairs.size());
  const auto len = static_cast<std::int64_t>(length);

  std::vector<std::int64_t> ids, types, mask;
  ids.reserve(pairs.size() * length);
  types.reserve(pairs.size() * length);
  mask.reserve(pairs.size() * length);
  for (const auto& pair : pairs) {
    auto encoded = state_->tokenizer.encode(pair, length);
    if (encoded.truncated) truncations_.fetch_add(1);
    ids.insert(ids.end(), encoded.input_ids.begin(), encoded.input_ids.end());
    types.insert(types.end(), encoded.token_type_ids.begin(), encoded.token_type_ids.end());
    mask.insert(mask.end(), encoded.attention_mask.begin(), encoded.attention_mask.end());
  }

  std::map<std::string, Tensor> feeds;
  for (const auto& name : state_->graph.input_names()) {
    const auto& source = name == "input_ids" ? ids : name == "token_type_ids" ? types : mask;
    feeds.emplace(name, Tensor::ints({batch, len}, source));
  }

  std::vector<Tensor> outputs;
  try {
    outputs = state_->graph.run(feeds);
  } catch (const inference::GraphError& e) {
    throw ScoringError(ScoringError::Kind::model_load, std::string("model evaluation failed: ") + e.what());
  }
  const Tensor& probs = outputs.front();
  const auto& names = state_->sidecar.class_names;
  const auto classes = static_cast<std::int64_t>(names.size());
  if (probs.type() != inference::ElementType::float32 || probs.shape() != std::vector<std::int64_t>{batch, classes}) {
    throw ScoringError(ScoringError::Kind::model_load,
                       "model output must be a float tensor of shape [batch, " + std::to_string(classes) + "]");
  }

  auto values = probs.f32();
  std::vector<LabelDistribution> out;
  out.reserve(pairs.size());
  for (std::int64_t b = 0; b < batch; ++b) {
    std::vector<std::pair<std::string, double>> entries;
    for (std::int64_t c = 0; c < classes; ++c) {
      entries.emplace_back(names[static_cast<std::size_t>(c)], static_cast<double>(values[b * classes + c]));
    }
    out.emplace_back(std::move(entries));
  }
  return out;
}

}  // namespace bident
