#include "bident/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "bident/cleaning.hpp"
#include "bident/corpus.hpp"
#include "bident/decision.hpp"
#include "bident/diagnostics.hpp"
#include "bident/error.hpp"
#include "bident/evaluation.hpp"
#include "bident/extraction.hpp"
#include "bident/report.hpp"
#include "bident/scoring.hpp"
#include "bident/text.hpp"

namespace bident::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration keys. Each key is a TOML key and a flag (underscores become
// dashes); flags win over the config file.

enum class KeyType { text, count, flag, list };

struct KeySpec {
  const char* name;
  KeyType type;
  const char* help;
};

constexpr KeySpec kKeys[] = {
    {"dataset", KeyType::text, "dataset file"},
    {"format", KeyType::text, "snli-jsonl, mnli-jsonl, xnli-tsv, qqp-tsv, mrpc-tsv or generic-jsonl"},
    {"language", KeyType::text, "language code; selects rows of an xnli-tsv file"},
    {"name", KeyType::text, "dataset name shown in reports (default: file stem)"},
    {"split", KeyType::text, "all, validation or test (seeded random halves)"},
    {"skip_malformed", KeyType::flag, "skip malformed rows instead of failing"},
    {"scorer", KeyType::text, "local:PATH, remote:URL, oracle:PATH or oracle:subseq"},
    {"model_id", KeyType::text, "model id recorded for a remote scorer (default: its URL)"},
    {"task", KeyType::text, "nli-3way or paraphrase-2way"},
    {"rule", KeyType::text, "argmax or t:X"},
    {"keep", KeyType::text, "entailment or neutral"},
    {"seed", KeyType::count, "root random seed"},
    {"out", KeyType::text, "output directory"},
    {"workers", KeyType::count, "scoring threads"},
    {"batch_size", KeyType::count, "pairs per backend call"},
    {"renormalize", KeyType::flag, "renormalize distributions outside the sum tolerance"},
    {"negatives", KeyType::flag, "also write entailment pairs the reverse direction rejected"},
    {"both_directions", KeyType::flag, "also score the forward direction; remove if either fails"},
    {"sheet", KeyType::text, "completed annotation sheet"},
    {"source", KeyType::text, "manifest of the run the records came from"},
    {"similarity", KeyType::text, "extraction output to summarize"},
    {"overlap", KeyType::list, "LANG=PATH extraction output (repeatable)"},
    {"pivot", KeyType::text, "dataset giving pivot-language texts for overlap"},
    {"from", KeyType::text, "extraction output to sample"},
    {"n", KeyType::count, "sample size"},
    {"s1", KeyType::text, "first sequence"},
    {"s2", KeyType::text, "second sequence"},
    {"pairs", KeyType::text, "JSONL file of {s1, s2}"},
    {"manifests", KeyType::list, "run manifests"},
    {"json", KeyType::flag, "print JSON instead of text"},
};

const KeySpec* find_key(std::string_view name) {
  for (const auto& k : kKeys) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

struct CommandSpec {
  const char* name;
  const char* help;
  std::vector<std::pair<const char*, json>> keys;  // key, default
};

std::vector<std::pair<const char*, json>> dataset_keys() {
  return {{"dataset", nullptr}, {"format", nullptr}, {"language", nullptr},
          {"name", nullptr},    {"split", "all"},    {"skip_malformed", false}};
}

std::vector<std::pair<const char*, json>> scoring_keys() {
  return {{"scorer", nullptr}, {"model_id", nullptr}, {"task", nullptr},
          {"workers", 1},      {"batch_size", 32},    {"renormalize", false}};
}

std::vector<CommandSpec> command_specs() {
  auto join = [](std::initializer_list<std::vector<std::pair<const char*, json>>> parts) {
    std::vector<std::pair<const char*, json>> all;
    for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
    return all;
  };
  return {
      {"extract", "mine paraphrases from an NLI dataset by bidirectional entailment",
       join({dataset_keys(), scoring_keys(),
             {{"rule", "argmax"}, {"keep", "entailment"}, {"negatives", false}, {"seed", 0}, {"out", nullptr}}})},
      {"clean", "remove gold paraphrases whose reverse direction is not a paraphrase",
       join({dataset_keys(), scoring_keys(),
             {{"rule", "argmax"}, {"both_directions", false}, {"seed", 0}, {"out", nullptr}}})},
      {"evaluate", "model precision/recall, hand precision, similarity or overlap",
       join({dataset_keys(), scoring_keys(),
             {{"rule", "argmax"},
              {"seed", 0},
              {"out", nullptr},
              {"sheet", nullptr},
              {"source", nullptr},
              {"similarity", nullptr},
              {"overlap", json::array()},
              {"pivot", nullptr}}})},
      {"sample", "draw an annotation sheet from an extraction output",
       {{"from", nullptr}, {"source", nullptr}, {"n", 100}, {"seed", 0}, {"out", nullptr}}},
      {"report", "tabulate run manifests", {{"manifests", json::array()}, {"out", nullptr}, {"json", false}}},
      {"score", "score sequence pairs and print their distributions",
       join({scoring_keys(), {{"s1", nullptr}, {"s2", nullptr}, {"pairs", nullptr}}})},
  };
}

std::string flag_name(std::string_view key) {
  std::string flag(key);
  for (auto& c : flag) {
    if (c == '_') c = '-';
  }
  return flag;
}

// Converts a config-file or flag value to the key's JSON representation.
json convert(const KeySpec& key, const json& value, std::string_view origin) {
  auto bad = [&](const char* expected) {
    return ConfigError(std::string(origin) + ": '" + key.name + "' must be " + expected);
  };
  switch (key.type) {
    case KeyType::text:
      if (!value.is_string()) throw bad("a string");
      return value;
    case KeyType::count:
      if (value.is_number_unsigned()) return value;
      if (value.is_number_integer() && value.get<std::int64_t>() >= 0) return value.get<std::uint64_t>();
      if (value.is_string()) {
        const auto& s = value.get_ref<const std::string&>();
        std::uint64_t v = 0;
        auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc() && end == s.data() + s.size() && !s.empty()) return v;
      }
      throw bad("a non-negative integer");
    case KeyType::flag:
      if (!value.is_boolean()) throw bad("true or false");
      return value;
    case KeyType::list:
      if (value.is_string()) return json::array({value});
      if (!value.is_array()) throw bad("a list of strings");
      for (const auto& item : value) {
        if (!item.is_string()) throw bad("a list of strings");
      }
      return value;
  }
  return value;
}

json toml_to_json(const toml::node& node, const std::string& key) {
  if (auto s = node.as_string()) return s->get();
  if (auto i = node.as_integer()) return i->get();
  if (auto b = node.as_boolean()) return b->get();
  if (auto f = node.as_floating_point()) return f->get();
  if (auto a = node.as_array()) {
    json out = json::array();
    for (const auto& item : *a) out.push_back(toml_to_json(item, key));
    return out;
  }
  throw ConfigError("config key '" + key + "' has an unsupported TOML type");
}

// A TOML file, or the JSON manifest of an earlier run (its "config" object).
json read_config_file(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path);
  if (fs::path(path).extension() == ".json") {
    std::ifstream in(path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    if (j.is_object() && j.contains("config") && j.contains("mode")) j = j.at("config");
    if (!j.is_object()) throw ConfigError("config " + path + " is not a JSON object");
    json out = json::object();
    for (const auto& [k, v] : j.items()) {
      if (!v.is_null()) out[k] = v;
    }
    return out;
  }
  toml::table table;
  try {
    table = toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config " << path << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(msg.str());
  }
  json out = json::object();
  for (const auto& [k, v] : table) {
    const std::string key(k.str());
    out[key] = toml_to_json(v, key);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Effective settings of one invocation.

class Settings {
 public:
  explicit Settings(ordered_json config) : config_(std::move(config)) {}

  const ordered_json& config() const { return config_; }

  std::optional<std::string> text(const char* key) const {
    const auto& v = config_.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<std::string>();
  }

  std::string required(const char* key) const {
    auto v = text(key);
    if (!v || v->empty()) throw ConfigError("missing required setting --" + flag_name(key));
    return *v;
  }

  std::uint64_t count(const char* key) const { return config_.at(key).get<std::uint64_t>(); }
  bool flag(const char* key) const { return config_.at(key).get<bool>(); }

  std::vector<std::string> list(const char* key) const {
    return config_.at(key).get<std::vector<std::string>>();
  }

 private:
  ordered_json config_;
};

// ---------------------------------------------------------------------------
// Outputs are written to "<name>.partial" and renamed only once every file of
// the run is complete, so a failed run leaves no partial artifacts.

class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) fs::remove(partial(f), ec);
  }

  std::ofstream open(const std::string& name) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
    files_.push_back(name);
    std::ofstream out(partial(name), std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + partial(name).string());
    return out;
  }

  void close(std::ofstream& out, const std::string& name) {
    out.close();
    if (!out) throw IoError("failed writing " + partial(name).string());
  }

  void commit() {
    for (const auto& f : files_) {
      std::error_code ec;
      fs::rename(partial(f), dir_ / f, ec);
      if (ec) throw IoError("cannot move " + partial(f).string() + " into place: " + ec.message());
    }
    committed_ = true;
  }

  const std::vector<std::string>& names() const { return files_; }

 private:
  fs::path partial(const std::string& name) const { return dir_ / (name + ".partial"); }

  fs::path dir_;
  std::vector<std::string> files_;
  bool committed_ = false;
};

void write_text(OutputSet& outputs, const std::string& name, const std::string& content) {
  auto out = outputs.open(name);
  out << content;
  outputs.close(out, name);
}

// ---------------------------------------------------------------------------

struct Context {
  std::string command;
  Settings settings;
  std::ostream& out;
  Diagnostics& diag;
};

ordered_json manifest_header(const Context& ctx) {
  return {{"tool", "bident"}, {"version", BIDENT_VERSION}, {"mode", ctx.command}};
}

std::string dump_manifest(ordered_json manifest, const Context& ctx, const OutputSet& outputs) {
  std::vector<std::string> names = outputs.names();
  names.push_back("manifest.json");
  manifest["outputs"] = names;
  manifest["config"] = ctx.settings.config();
  return manifest.dump(2) + "\n";
}

fs::path require_existing(const Settings& s, const char* key) {
  fs::path p = s.required(key);
  if (!fs::exists(p)) throw ConfigError("--" + flag_name(key) + " file not found: " + p.string());
  return p;
}

ordered_json distribution_json(const LabelDistribution& d) {
  ordered_json j = ordered_json::object();
  for (const auto& [cls, p] : d.entries()) j[cls] = p;
  return j;
}

ordered_json load_stats_json(const LoadStats& s) {
  return {{"rows", s.rows},
          {"dropped_no_label", s.dropped_no_label},
          {"skipped_malformed", s.skipped_malformed},
          {"language_filtered", s.language_filtered},
          {"duplicates", s.duplicates}};
}

struct LoadedDataset {
  DatasetSplit split;
  ordered_json description;
};

LoadedDataset load_configured_dataset(const Context& ctx, const char* path_key = "dataset") {
  const auto& s = ctx.settings;
  const fs::path path = require_existing(s, path_key);
  const auto format = parse_format(s.required("format"));
  const std::string language = s.text("language").value_or("");
  const std::string split_mode = s.text("split").value_or("all");
  if (split_mode != "all" && split_mode != "validation" && split_mode != "test") {
    throw ConfigError("--split must be all, validation or test, not '" + split_mode + "'");
  }

  LoadOptions options;
  options.skip_malformed = s.flag("skip_malformed");
  options.diagnostics = &ctx.diag;
  DatasetSplit split = load_dataset(path, format, language, options);
  if (split_mode != "all") {
    auto halves = split_half(split, s.count("seed"));
    split = split_mode == "validation" ? std::move(halves.first) : std::move(halves.second);
  }

  ordered_json description{{"name", s.text("name").value_or(text::stem(path.string()))},
                           {"path", path.string()},
                           {"format", to_string(format)},
                           {"language", language.empty() ? ordered_json(nullptr) : ordered_json(language)},
                           {"split", split_mode},
                           {"records", split.size()},
                           {"load", load_stats_json(split.stats)}};
  return {std::move(split), std::move(description)};
}

// The task a command needs, checked against an explicit --task.
Task resolve_task(const Context& ctx, std::optional<Task> required) {
  const auto given = ctx.settings.text("task");
  if (!required) return given ? parse_task(*given) : Task::nli_3way;
  if (given && parse_task(*given) != *required) {
    throw ConfigError(ctx.command + " needs a " + std::string(to_string(*required)) + " scorer, but the task is " +
                      *given);
  }
  return *required;
}

std::unique_ptr<Scorer> make_scorer(const Context& ctx, Task task) {
  const auto& s = ctx.settings;
  const std::string spec = s.required("scorer");
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("--scorer must be local:PATH, remote:URL, oracle:PATH or oracle:subseq, not '" + spec + "'");
  }
  const std::string kind = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);

  std::unique_ptr<Scorer> scorer;
  if (kind == "local") {
    if (!fs::exists(arg)) throw ConfigError("model file not found: " + arg);
    if (!fs::exists(sidecar_path_for(arg))) {
      throw ConfigError("model sidecar not found: " + sidecar_path_for(arg).string());
    }
    scorer = std::make_unique<LocalModelScorer>(arg);
  } else if (kind == "remote") {
    RemoteOptions options;
    options.url = arg;
    options.task = task;
    options.model_id = s.text("model_id").value_or(arg);
    if (const char* token = std::getenv("BIDENT_REMOTE_TOKEN"); token && *token) options.bearer_token = token;
    scorer = std::make_unique<RemoteScorer>(options);
  } else if (kind == "oracle" && arg == "subseq") {
    scorer = StaticOracle::subsequence(task);
  } else if (kind == "oracle") {
    if (!fs::exists(arg)) throw ConfigError("oracle table not found: " + arg);
    scorer = StaticOracle::from_table(arg, task);
  } else {
    throw ConfigError("unknown scorer kind '" + kind + "'");
  }

  if (scorer->task() != task) {
    throw ConfigError(ctx.command + " needs a " + std::string(to_string(task)) + " scorer, but " + spec + " is " +
                      std::string(to_string(scorer->task())));
  }
  return scorer;
}

ScoreOptions score_options(const Settings& s) {
  ScoreOptions options;
  options.workers = s.count("workers");
  options.batch_size = s.count("batch_size");
  options.check.renormalize = s.flag("renormalize");
  if (options.workers == 0) throw ConfigError("--workers must be at least 1");
  if (options.batch_size == 0) throw ConfigError("--batch-size must be at least 1");
  return options;
}

std::vector<ExtractionRecord> read_extraction_records(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<ExtractionRecord> records;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (text::is_blank(line)) continue;
    try {
      records.push_back(extraction_record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": not an extraction record: " + e.what(), line_number);
    }
  }
  return records;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + " is not valid JSON: " + e.what());
  }
}

// The manifest that describes where `file` came from: --source, or a
// manifest.json beside it.
std::optional<json> source_manifest(const Context& ctx, const fs::path& file) {
  if (auto source = ctx.settings.text("source")) {
    if (!fs::exists(*source)) throw ConfigError("--source file not found: " + *source);
    return read_json_file(*source);
  }
  const auto sibling = file.parent_path() / "manifest.json";
  if (fs::exists(sibling)) return read_json_file(sibling);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_extract(Context& ctx) {
  const auto& s = ctx.settings;
  const auto rule = DecisionRule::parse(s.text("rule").value_or("argmax"));
  const auto keep = parse_keep(s.text("keep").value_or("entailment"));
  const Task task = resolve_task(ctx, Task::nli_3way);
  rule.validate(task);
  if (keep == Keep::neutral && !rule.is_argmax()) throw ConfigError("--keep neutral requires --rule argmax");
  const fs::path out_dir = s.required("out");
  const auto options = score_options(s);
  auto scorer = make_scorer(ctx, task);
  auto dataset = load_configured_dataset(ctx);

  ExtractionOptions extraction_options;
  extraction_options.scoring = options;
  extraction_options.collect_negatives = s.flag("negatives");
  const auto result = extract(dataset.split, *scorer, rule, keep, extraction_options);

  OutputSet outputs(out_dir);
  {
    auto f = outputs.open("extracted.jsonl");
    for (const auto& r : result.records) f << to_json(r).dump() << '\n';
    outputs.close(f, "extracted.jsonl");
  }
  if (extraction_options.collect_negatives) {
    auto f = outputs.open("negatives.jsonl");
    for (const auto& r : result.negatives) f << to_json(r).dump() << '\n';
    outputs.close(f, "negatives.jsonl");
  }

  auto manifest = manifest_header(ctx);
  manifest["table"] = "extraction";
  manifest["dataset"] = dataset.description;
  manifest["scorer"] = to_json(scorer->descriptor());
  manifest["rule"] = rule.to_string();
  manifest["keep"] = to_string(keep);
  manifest["counts"] = to_json(result.counts);
  manifest["truncations"] = scorer->truncation_count();
  manifest["normalization"] = "NFC";
  write_text(outputs, "manifest.json", dump_manifest(std::move(manifest), ctx, outputs));
  outputs.commit();

  ctx.out << "extracted " << result.counts.extracted << " of " << result.counts.entailment_selected
          << " entailment pairs (" << result.counts.trivial << " trivial) -> " << (out_dir / "extracted.jsonl").string()
          << '\n';
  return kOk;
}

int cmd_clean(Context& ctx) {
  const auto& s = ctx.settings;
  const auto rule = DecisionRule::parse(s.text("rule").value_or("argmax"));
  const Task task = resolve_task(ctx, Task::paraphrase_2way);
  rule.validate(task);
  const fs::path out_dir = s.required("out");
  const auto options = score_options(s);
  auto scorer = make_scorer(ctx, task);
  auto dataset = load_configured_dataset(ctx);

  CleaningOptions cleaning_options;
  cleaning_options.scoring = options;
  cleaning_options.both_directions = s.flag("both_directions");
  const auto result = clean(dataset.split, *scorer, rule, cleaning_options);

  OutputSet outputs(out_dir);
  {
    auto f = outputs.open("cleaned.jsonl");
    for (const auto& r : result.cleaned) f << to_jsonl_line(r) << '\n';
    outputs.close(f, "cleaned.jsonl");
  }
  {
    auto f = outputs.open("removed.jsonl");
    for (const auto& r : result.removed) f << to_json(r).dump() << '\n';
    outputs.close(f, "removed.jsonl");
  }

  auto manifest = manifest_header(ctx);
  manifest["table"] = "cleaning";
  manifest["dataset"] = dataset.description;
  manifest["scorer"] = to_json(scorer->descriptor());
  manifest["rule"] = rule.to_string();
  manifest["both_directions"] = cleaning_options.both_directions;
  manifest["counts"] = to_json(result.counts);
  manifest["truncations"] = scorer->truncation_count();
  manifest["normalization"] = "NFC";
  write_text(outputs, "manifest.json", dump_manifest(std::move(manifest), ctx, outputs));
  outputs.commit();

  ctx.out << "removed " << result.counts.removed << " of " << result.counts.paraphrase_gold
          << " gold paraphrases; " << result.counts.cleaned << " records kept -> "
          << (out_dir / "cleaned.jsonl").string() << '\n';
  return kOk;
}

// Writes manifest.json to --out when given, and prints `result`.
int finish_evaluation(Context& ctx, ordered_json manifest, const ordered_json& result) {
  if (auto out_dir = ctx.settings.text("out")) {
    OutputSet outputs(*out_dir);
    write_text(outputs, "manifest.json", dump_manifest(std::move(manifest), ctx, outputs));
    outputs.commit();
  }
  ctx.out << result.dump(2) << '\n';
  return kOk;
}

int evaluate_model(Context& ctx) {
  const auto& s = ctx.settings;
  const auto rule = DecisionRule::parse(s.text("rule").value_or("argmax"));
  const auto options = score_options(s);
  auto dataset = load_configured_dataset(ctx);
  const auto split_task_value = split_task(dataset.split);
  if (!split_task_value) throw DataError("dataset has no labeled records to evaluate");
  const Task task = resolve_task(ctx, *split_task_value);
  rule.validate(task);
  auto scorer = make_scorer(ctx, task);

  std::vector<SequencePair> pairs;
  std::vector<std::string> gold;
  for (const auto& r : dataset.split.records) {
    pairs.push_back(r.pair());
    gold.push_back(r.label);
  }
  const auto dists = score_batch(*scorer, pairs, options);

  const std::string positive(task == Task::nli_3way ? kEntailment : kNonParaphrase);
  std::vector<std::string> decided, argmax;
  for (const auto& d : dists) {
    decided.push_back(decide(d, rule, positive) ? positive : std::string());
    argmax.push_back(d.argmax_class());
  }
  const auto counts = confusion(gold, decided, positive);
  const auto m = metrics(counts);

  auto manifest = manifest_header(ctx);
  manifest["analysis"] = "model";
  manifest["table"] = task == Task::nli_3way ? "extraction" : "cleaning";
  manifest["dataset"] = dataset.description;
  manifest["scorer"] = to_json(scorer->descriptor());
  manifest["rule"] = rule.to_string();
  manifest["metrics"] = to_json(counts, m);
  manifest["confusion_matrix"] = to_json(confusion_matrix(gold, argmax, class_names(task)));
  manifest["truncations"] = scorer->truncation_count();
  manifest["normalization"] = "NFC";
  const ordered_json result = manifest["metrics"];
  return finish_evaluation(ctx, std::move(manifest), result);
}

int evaluate_sheet(Context& ctx) {
  const fs::path sheet_path = require_existing(ctx.settings, "sheet");
  std::ifstream in(sheet_path);
  if (!in) throw IoError("cannot read " + sheet_path.string());
  const auto sheet = read_tsv(in);
  const double hp = hand_precision(sheet);

  auto manifest = manifest_header(ctx);
  manifest["analysis"] = "hand";
  if (auto source = source_manifest(ctx, sheet_path)) {
    for (const char* key : {"table", "dataset", "scorer", "rule"}) {
      if (source->contains(key)) manifest[key] = source->at(key);
    }
  }
  manifest["sheet"] = sheet_path.string();
  manifest["rows"] = sheet.rows.size();
  manifest["hand_precision"] = hp;
  return finish_evaluation(ctx, std::move(manifest), {{"rows", sheet.rows.size()}, {"hand_precision", hp}});
}

int evaluate_similarity(Context& ctx) {
  const fs::path path = require_existing(ctx.settings, "similarity");
  const auto records = read_extraction_records(path);
  const auto stats = to_json(similarity_stats(records));
  auto manifest = manifest_header(ctx);
  manifest["analysis"] = "similarity";
  manifest["input"] = path.string();
  manifest["similarity"] = stats;
  return finish_evaluation(ctx, std::move(manifest), stats);
}

int evaluate_overlap(Context& ctx) {
  std::map<std::string, std::vector<ExtractionRecord>> runs;
  ordered_json inputs = ordered_json::object();
  for (const auto& item : ctx.settings.list("overlap")) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--overlap expects LANG=PATH, got '" + item + "'");
    const std::string language = item.substr(0, eq);
    const fs::path path = item.substr(eq + 1);
    if (!fs::exists(path)) throw ConfigError("--overlap file not found: " + path.string());
    if (runs.count(language)) throw ConfigError("--overlap lists language " + language + " twice");
    runs[language] = read_extraction_records(path);
    inputs[language] = path.string();
  }

  std::optional<std::map<std::string, std::string>> pivot;
  if (ctx.settings.text("pivot")) {
    auto dataset = load_configured_dataset(ctx, "pivot");
    pivot.emplace();
    for (const auto& r : dataset.split.records) (*pivot)[r.id] = r.s1 + '\t' + r.s2;
  }
  const auto report = to_json(overlap(runs, pivot ? &*pivot : nullptr));

  auto manifest = manifest_header(ctx);
  manifest["analysis"] = "overlap";
  manifest["inputs"] = inputs;
  manifest["overlap"] = report;
  return finish_evaluation(ctx, std::move(manifest), report);
}

int cmd_evaluate(Context& ctx) {
  const auto& s = ctx.settings;
  const int selected = int(s.text("sheet").has_value()) + int(s.text("similarity").has_value()) +
                       int(!s.list("overlap").empty());
  if (selected > 1) throw ConfigError("evaluate takes only one of --sheet, --similarity, --overlap");
  if (s.text("sheet")) return evaluate_sheet(ctx);
  if (s.text("similarity")) return evaluate_similarity(ctx);
  if (!s.list("overlap").empty()) return evaluate_overlap(ctx);
  return evaluate_model(ctx);
}

int cmd_sample(Context& ctx) {
  const auto& s = ctx.settings;
  const fs::path from = require_existing(s, "from");
  const fs::path out_dir = s.required("out");
  const auto records = read_extraction_records(from);
  const auto sheet = sample_for_validation(records, s.count("n"), s.count("seed"));

  OutputSet outputs(out_dir);
  {
    auto f = outputs.open("sheet.tsv");
    write_tsv(f, sheet);
    outputs.close(f, "sheet.tsv");
  }
  auto manifest = manifest_header(ctx);
  if (auto source = source_manifest(ctx, from)) {
    for (const char* key : {"table", "dataset", "scorer", "rule"}) {
      if (source->contains(key)) manifest[key] = source->at(key);
    }
  }
  manifest["from"] = from.string();
  manifest["available"] = records.size();
  manifest["sampled"] = sheet.rows.size();
  write_text(outputs, "manifest.json", dump_manifest(std::move(manifest), ctx, outputs));
  outputs.commit();
  ctx.out << "sampled " << sheet.rows.size() << " of " << records.size() << " records -> "
          << (out_dir / "sheet.tsv").string() << '\n';
  return kOk;
}

int cmd_report(Context& ctx) {
  const auto paths = ctx.settings.list("manifests");
  if (paths.empty()) throw ConfigError("report needs at least one run manifest");
  std::vector<ReportEntry> entries;
  for (const auto& p : paths) {
    if (!fs::exists(p)) throw ConfigError("manifest not found: " + p);
    entries.push_back(report_entry_from_manifest(read_json_file(p)));
  }
  const auto report = render_report(entries);
  const auto text = to_text(report);
  const auto report_json = to_json(report).dump(2) + "\n";

  if (auto out_dir = ctx.settings.text("out")) {
    OutputSet outputs(*out_dir);
    write_text(outputs, "report.txt", text);
    write_text(outputs, "report.json", report_json);
    auto manifest = manifest_header(ctx);
    manifest["tables"] = report.tables.size();
    write_text(outputs, "manifest.json", dump_manifest(std::move(manifest), ctx, outputs));
    outputs.commit();
  }
  ctx.out << (ctx.settings.flag("json") ? report_json : text);
  return kOk;
}

int cmd_score(Context& ctx) {
  const auto& s = ctx.settings;
  const Task task = resolve_task(ctx, std::nullopt);
  const auto options = score_options(s);
  std::vector<SequencePair> pairs;
  if (auto path = s.text("pairs")) {
    if (s.text("s1") || s.text("s2")) throw ConfigError("give either --pairs or --s1/--s2");
    if (!fs::exists(*path)) throw ConfigError("--pairs file not found: " + *path);
    std::ifstream in(*path);
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
      ++line_number;
      if (text::is_blank(line)) continue;
      try {
        const auto j = json::parse(line);
        pairs.push_back({text::nfc(j.at("s1").get<std::string>()), text::nfc(j.at("s2").get<std::string>())});
      } catch (const json::exception& e) {
        throw DataError(*path + ": expected {\"s1\", \"s2\"}: " + e.what(), line_number);
      }
    }
  } else {
    pairs.push_back({text::nfc(s.required("s1")), text::nfc(s.required("s2"))});
  }
  auto scorer = make_scorer(ctx, task);
  const auto dists = score_batch(*scorer, pairs, options);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ordered_json line{{"s1", pairs[i].s1},
                      {"s2", pairs[i].s2},
                      {"distribution", distribution_json(dists[i])},
                      {"argmax", dists[i].argmax_class()}};
    ctx.out << line.dump() << '\n';
  }
  return kOk;
}

int dispatch(Context& ctx) {
  if (ctx.command == "extract") return cmd_extract(ctx);
  if (ctx.command == "clean") return cmd_clean(ctx);
  if (ctx.command == "evaluate") return cmd_evaluate(ctx);
  if (ctx.command == "sample") return cmd_sample(ctx);
  if (ctx.command == "report") return cmd_report(ctx);
  return cmd_score(ctx);
}

int report_error(Diagnostics& diag, const char* kind, int status, const std::string& message) {
  diag.emit("error", {{"kind", kind}, {"exit_status", status}, {"message", message}});
  return status;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Diagnostics diag(err);
  CLI::App app("Paraphrase mining and paraphrase-corpus cleaning by bidirectional entailment", "bident");
  app.require_subcommand(1);
  app.set_version_flag("--version", BIDENT_VERSION);

  const auto specs = command_specs();
  // Flag storage; std::map keeps references stable.
  std::map<std::string, std::map<std::string, std::string>> texts;
  std::map<std::string, std::map<std::string, bool>> flags;
  std::map<std::string, std::map<std::string, std::vector<std::string>>> lists;
  std::map<std::string, std::map<std::string, CLI::Option*>> options;
  std::map<std::string, std::string> config_paths;

  for (const auto& spec : specs) {
    auto* sub = app.add_subcommand(spec.name, spec.help);
    sub->add_option("--config", config_paths[spec.name], "TOML config, or the manifest of an earlier run");
    for (const auto& [key, default_value] : spec.keys) {
      const KeySpec* k = find_key(key);
      const std::string flag = std::string(k->name) == "n" ? "-n" : "--" + flag_name(key);
      CLI::Option* opt = nullptr;
      switch (k->type) {
        case KeyType::text:
        case KeyType::count:
          opt = sub->add_option(flag, texts[spec.name][key], k->help);
          break;
        case KeyType::flag:
          opt = sub->add_flag(flag, flags[spec.name][key], k->help);
          break;
        case KeyType::list:
          if (std::string(key) == "manifests") {
            opt = sub->add_option(key, lists[spec.name][key], k->help);
          } else {
            opt = sub->add_option(flag, lists[spec.name][key], k->help)->expected(1)->take_all();
          }
          break;
      }
      options[spec.name][key] = opt;
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return report_error(diag, "config", kConfig, e.what());
  }

  const auto* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  const auto spec = std::find_if(specs.begin(), specs.end(), [&](const CommandSpec& c) { return c.name == command; });

  try {
    json from_file = json::object();
    if (!config_paths[command].empty()) from_file = read_config_file(config_paths[command]);
    for (const auto& [key, value] : from_file.items()) {
      if (!find_key(key) && key != "mode") throw ConfigError("unknown config key '" + key + "'");
    }

    ordered_json effective = ordered_json::object();
    for (const auto& [key, default_value] : spec->keys) {
      const KeySpec& k = *find_key(key);
      json value = default_value;
      if (from_file.contains(key) && !from_file.at(key).is_null()) value = convert(k, from_file.at(key), "config");
      if (options[command][key]->count() > 0) {
        switch (k.type) {
          case KeyType::text:
          case KeyType::count:
            value = convert(k, texts[command][key], "flag");
            break;
          case KeyType::flag:
            value = flags[command][key];
            break;
          case KeyType::list:
            value = lists[command][key];
            break;
        }
      }
      effective[key] = value;
    }

    Context ctx{command, Settings(std::move(effective)), out, diag};
    return dispatch(ctx);
  } catch (const ConfigError& e) {
    return report_error(diag, "config", kConfig, e.what());
  } catch (const ScoringError& e) {
    return report_error(diag, "backend", kBackend, e.what());
  } catch (const DataError& e) {
    return report_error(diag, "data", kIo, e.what());
  } catch (const IoError& e) {
    return report_error(diag, "io", kIo, e.what());
  } catch (const std::exception& e) {
    return report_error(diag, "internal", kInternal, e.what());
  }
}

}  // namespace bident::cli
