#include "bident/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "bident/error.hpp"
#include "bident/rng.hpp"
#include "bident/text.hpp"

namespace bident {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::string_view kUtf8Bom = "\xEF\xBB\xBF";

// A row that violates the adapter's shape. Aborts the load unless skipping.
struct MalformedRow {
  std::string reason;
};

bool is_no_consensus(std::string_view label) {
  label = text::trim(label);
  return label.empty() || label == "-";
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string required_text(std::string_view value, std::string_view field) {
  if (text::is_blank(value)) throw MalformedRow{"empty " + std::string(field)};
  return text::nfc(value);
}

std::string json_text(const json& row, const char* key) {
  auto it = row.find(key);
  if (it == row.end() || !it->is_string()) throw MalformedRow{std::string("missing string field '") + key + "'"};
  return required_text(it->get_ref<const std::string&>(), key);
}

std::optional<std::string> json_optional_string(const json& row, const char* key) {
  auto it = row.find(key);
  if (it == row.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw MalformedRow{std::string("field '") + key + "' is not a string"};
}

// Maps a native label onto the canonical class set; nullopt means no gold label.
std::optional<std::string> canonical_label(std::string_view raw, std::optional<Task> expected) {
  if (is_no_consensus(raw)) return std::nullopt;
  auto label = text::trim(raw);
  auto task = task_of_label(label);
  if (!task || (expected && *task != *expected)) {
    throw MalformedRow{"unrecognized label '" + std::string(label) + "'"};
  }
  return std::string(label);
}

class Loader {
 public:
  Loader(const std::filesystem::path& path, DatasetFormat format, std::string_view language,
         const LoadOptions& options)
      : path_(path), format_(format), language_(language), options_(options), stem_(text::stem(path.string())) {
    split_.name = options.split_name;
  }

  DatasetSplit run() {
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file " + path_.string());

    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
      ++line_number;
      std::string_view view = line;
      if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
      if (line_number == 1 && view.substr(0, kUtf8Bom.size()) == kUtf8Bom) view.remove_prefix(kUtf8Bom.size());
      try {
        handle_line(view, line_number);
      } catch (const MalformedRow& bad) {
        if (!options_.skip_malformed) {
          throw DataError(path_.string() + ": malformed row: " + bad.reason, line_number);
        }
        ++split_.stats.skipped_malformed;
        diag().emit("row_skipped", {{"path", path_.string()}, {"line", line_number}, {"reason", bad.reason}});
      }
    }
    if (in.bad()) throw IoError("read error on " + path_.string());
    if (is_tsv() && !header_seen_ && line_number > 0) {
      throw DataError(path_.string() + ": missing TSV header", 1);
    }

    diag().emit("load_summary", {{"path", path_.string()},
                                 {"format", to_string(format_)},
                                 {"split", split_.name},
                                 {"rows", split_.stats.rows},
                                 {"records", split_.records.size()},
                                 {"dropped_no_label", split_.stats.dropped_no_label},
                                 {"skipped_malformed", split_.stats.skipped_malformed},
                                 {"language_filtered", split_.stats.language_filtered},
                                 {"duplicates", split_.stats.duplicates}});
    return std::move(split_);
  }

 private:
  Diagnostics& diag() { return options_.diagnostics ? *options_.diagnostics : Diagnostics::null(); }

  bool is_tsv() const {
    return format_ == DatasetFormat::xnli_tsv || format_ == DatasetFormat::qqp_tsv ||
           format_ == DatasetFormat::mrpc_tsv;
  }

  std::string fallback_id(std::size_t line_number) const { return stem_ + ":" + std::to_string(line_number); }

  void handle_line(std::string_view line, std::size_t line_number) {
    if (is_tsv()) {
      if (!header_seen_) {
        read_header(line);
        header_seen_ = true;
        return;
      }
      if (line.empty()) return;
      ++split_.stats.rows;
      handle_tsv_row(split_tabs(line), line_number);
    } else {
      if (text::is_blank(line)) return;
      ++split_.stats.rows;
      json row;
      try {
        row = json::parse(line);
      } catch (const json::parse_error& e) {
        throw MalformedRow{std::string("invalid JSON: ") + e.what()};
      }
      if (!row.is_object()) throw MalformedRow{"JSON row is not an object"};
      handle_json_row(row, line_number);
    }
  }

  void read_header(std::string_view line) {
    auto fields = split_tabs(line);
    for (std::size_t i = 0; i < fields.size(); ++i) columns_.emplace_back(text::trim(fields[i]));
    auto need = [&](std::initializer_list<const char*> names) {
      for (const char* name : names) {
        if (column(name) < 0) {
          throw DataError(path_.string() + ": TSV header lacks column '" + name + "'", 1);
        }
      }
    };
    switch (format_) {
      case DatasetFormat::xnli_tsv:
        need({"language", "gold_label", "sentence1", "sentence2"});
        break;
      case DatasetFormat::qqp_tsv:
        need({"question1", "question2"});
        break;
      case DatasetFormat::mrpc_tsv:
        if (columns_.size() < 5) throw DataError(path_.string() + ": MRPC header needs 5 columns", 1);
        break;
      default:
        break;
    }
  }

  int column(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i] == name) return static_cast<int>(i);
    }
    return -1;
  }

  void handle_tsv_row(const std::vector<std::string_view>& fields, std::size_t line_number) {
    if (fields.size() != columns_.size()) {
      throw MalformedRow{"expected " + std::to_string(columns_.size()) + " fields, found " +
                         std::to_string(fields.size())};
    }
    auto field = [&](std::string_view name) -> std::string_view {
      int idx = column(name);
      return idx < 0 ? std::string_view{} : fields[static_cast<std::size_t>(idx)];
    };

    Record record;
    std::optional<std::string> label;
    switch (format_) {
      case DatasetFormat::xnli_tsv: {
        auto row_language = text::trim(field("language"));
        if (row_language != language_) {
          ++split_.stats.language_filtered;
          return;
        }
        record.s1 = required_text(field("sentence1"), "sentence1");
        record.s2 = required_text(field("sentence2"), "sentence2");
        label = canonical_label(field("gold_label"), Task::nli_3way);
        auto pair_id = text::trim(field("pairID"));
        record.id = pair_id.empty() ? fallback_id(line_number) : std::string(pair_id);
        if (auto genre = text::trim(field("genre")); !genre.empty()) record.genre = std::string(genre);
        record.language = std::string(row_language);
        break;
      }
      case DatasetFormat::qqp_tsv: {
        record.s1 = required_text(field("question1"), "question1");
        record.s2 = required_text(field("question2"), "question2");
        auto dup = text::trim(field("is_duplicate"));
        if (dup == "1") {
          label = std::string(kParaphrase);
        } else if (dup == "0") {
          label = std::string(kNonParaphrase);
        } else if (!is_no_consensus(dup)) {
          throw MalformedRow{"is_duplicate must be 0 or 1, got '" + std::string(dup) + "'"};
        }
        auto id = text::trim(field("id"));
        record.id = id.empty() ? fallback_id(line_number) : std::string(id);
        record.language = std::string(language_);
        break;
      }
      case DatasetFormat::mrpc_tsv: {
        // Quality, #1 ID, #2 ID, #1 String, #2 String
        auto quality = text::trim(fields[0]);
        if (quality == "1") {
          label = std::string(kParaphrase);
        } else if (quality == "0") {
          label = std::string(kNonParaphrase);
        } else if (!is_no_consensus(quality)) {
          throw MalformedRow{"quality flag must be 0 or 1, got '" + std::string(quality) + "'"};
        }
        auto id1 = text::trim(fields[1]);
        auto id2 = text::trim(fields[2]);
        record.id = (id1.empty() || id2.empty()) ? fallback_id(line_number)
                                                 : std::string(id1) + "-" + std::string(id2);
        record.s1 = required_text(fields[3], "#1 String");
        record.s2 = required_text(fields[4], "#2 String");
        record.language = std::string(language_);
        break;
      }
      default:
        throw Error("unreachable TSV format");
    }
    finish(std::move(record), std::move(label), line_number);
  }

  void handle_json_row(const json& row, std::size_t line_number) {
    Record record;
    std::optional<std::string> label;
    std::optional<std::string> id;
    switch (format_) {
      case DatasetFormat::snli_jsonl:
      case DatasetFormat::mnli_jsonl: {
        record.s1 = json_text(row, "sentence1");
        record.s2 = json_text(row, "sentence2");
        auto gold = json_optional_string(row, "gold_label");
        label = canonical_label(gold.value_or(""), Task::nli_3way);
        id = json_optional_string(row, "pairID");
        if (format_ == DatasetFormat::mnli_jsonl) record.genre = json_optional_string(row, "genre");
        record.language = std::string(language_);
        break;
      }
      case DatasetFormat::generic_jsonl: {
        record.s1 = json_text(row, "s1");
        record.s2 = json_text(row, "s2");
        auto raw = json_optional_string(row, "label");
        label = canonical_label(raw.value_or(""), std::nullopt);
        id = json_optional_string(row, "id");
        record.genre = json_optional_string(row, "genre");
        record.language = json_optional_string(row, "language").value_or(std::string(language_));
        break;
      }
      default:
        throw Error("unreachable JSON format");
    }
    record.id = (id && !id->empty()) ? *id : fallback_id(line_number);
    finish(std::move(record), std::move(label), line_number);
  }

  void finish(Record record, std::optional<std::string> label, std::size_t line_number) {
    if (!label) {
      ++split_.stats.dropped_no_label;
      diag().emit("row_dropped", {{"path", path_.string()}, {"line", line_number}, {"reason", "no gold label"}});
      return;
    }
    auto task = task_of_label(*label);
    if (task_ && task != task_) throw MalformedRow{"label '" + *label + "' mixes NLI and paraphrase classes"};
    if (!ids_.insert(record.id).second) throw MalformedRow{"duplicate id '" + record.id + "'"};
    task_ = task;
    record.label = std::move(*label);

    std::string key = record.s1;
    key.push_back('\0');
    key += record.s2;
    if (!pairs_.insert(std::move(key)).second) {
      record.duplicate = true;
      ++split_.stats.duplicates;
    }
    split_.records.push_back(std::move(record));
  }

  std::filesystem::path path_;
  DatasetFormat format_;
  std::string language_;
  LoadOptions options_;
  std::string stem_;

  DatasetSplit split_;
  std::vector<std::string> columns_;
  bool header_seen_ = false;
  std::optional<Task> task_;
  std::unordered_set<std::string> ids_;
  std::unordered_set<std::string> pairs_;
};

DatasetSplit subset(const DatasetSplit& source, const std::vector<std::size_t>& indices, std::string name) {
  DatasetSplit out;
  out.name = std::move(name);
  out.records.reserve(indices.size());
  for (auto i : indices) out.records.push_back(source.records[i]);
  return out;
}

}  // namespace

std::string_view to_string(DatasetFormat format) {
  switch (format) {
    case DatasetFormat::snli_jsonl: return "snli-jsonl";
    case DatasetFormat::mnli_jsonl: return "mnli-jsonl";
    case DatasetFormat::xnli_tsv: return "xnli-tsv";
    case DatasetFormat::qqp_tsv: return "qqp-tsv";
    case DatasetFormat::mrpc_tsv: return "mrpc-tsv";
    case DatasetFormat::generic_jsonl: return "generic-jsonl";
  }
  return "?";
}

DatasetFormat parse_format(std::string_view tag) {
  for (auto f : {DatasetFormat::snli_jsonl, DatasetFormat::mnli_jsonl, DatasetFormat::xnli_tsv,
                 DatasetFormat::qqp_tsv, DatasetFormat::mrpc_tsv, DatasetFormat::generic_jsonl}) {
    if (to_string(f) == tag) return f;
  }
  throw ConfigError("unknown dataset format '" + std::string(tag) +
                    "' (expected snli-jsonl, mnli-jsonl, xnli-tsv, qqp-tsv, mrpc-tsv or generic-jsonl)");
}

DatasetSplit load_dataset(const std::filesystem::path& path, DatasetFormat format, std::string_view language,
                          const LoadOptions& options) {
  if (format == DatasetFormat::xnli_tsv && language.empty()) {
    throw ConfigError("xnli-tsv needs a language code to select rows");
  }
  return Loader(path, format, language, options).run();
}

std::string to_jsonl_line(const Record& record) {
  ordered_json row;
  row["id"] = record.id;
  row["s1"] = record.s1;
  row["s2"] = record.s2;
  row["label"] = record.label;
  if (record.genre) row["genre"] = *record.genre;
  row["language"] = record.language;
  return row.dump();
}

void write_jsonl(std::ostream& out, const DatasetSplit& split) {
  for (const auto& record : split.records) out << to_jsonl_line(record) << '\n';
}

std::optional<Task> split_task(const DatasetSplit& split) {
  std::optional<Task> task;
  for (const auto& record : split.records) {
    auto t = task_of_label(record.label);
    if (!t) throw DataError("record '" + record.id + "' has non-canonical label '" + record.label + "'");
    if (task && *task != *t) throw DataError("split mixes NLI and paraphrase labels");
    task = t;
  }
  return task;
}

std::pair<DatasetSplit, DatasetSplit> split_half(const DatasetSplit& split, std::uint64_t seed) {
  if (split.empty()) throw ConfigError("split_half needs a non-empty split");
  Rng rng(seed);
  auto order = permutation(split.size(), rng);
  const std::size_t first_size = (split.size() + 1) / 2;
  std::vector<std::size_t> first(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first_size));
  std::vector<std::size_t> second(order.begin() + static_cast<std::ptrdiff_t>(first_size), order.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {subset(split, first, "validation"), subset(split, second, "test")};
}

std::pair<DatasetSplit, DatasetSplit> carve_validation(const DatasetSplit& train, std::size_t n,
                                                       std::uint64_t seed) {
  if (n > train.size()) {
    throw ConfigError("cannot carve " + std::to_string(n) + " validation records from " +
                      std::to_string(train.size()));
  }
  Rng rng(seed);
  auto picked = sample_indices(train.size(), n, rng);
  std::vector<std::size_t> rest;
  rest.reserve(train.size() - n);
  std::size_t p = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (p < picked.size() && picked[p] == i) {
      ++p;
    } else {
      rest.push_back(i);
    }
  }
  return {subset(train, rest, train.name), subset(train, picked, "validation")};
}

}  // namespace bident
