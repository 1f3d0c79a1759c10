#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bident/diagnostics.hpp"
#include "bident/labels.hpp"

namespace bident {

// One sequence pair with its gold label. For NLI records s1 is the premise and
// s2 the hypothesis; the label set (NLI or paraphrase) follows from `label`.
struct Record {
  std::string id;
  std::string s1;
  std::string s2;
  std::string label;
  std::optional<std::string> genre;
  std::string language;
  // Set on every occurrence of an (s1, s2) pair after the first.
  bool duplicate = false;

  SequencePair pair() const { return {s1, s2}; }
};

struct LoadStats {
  std::size_t rows = 0;
  std::size_t dropped_no_label = 0;
  std::size_t skipped_malformed = 0;
  std::size_t language_filtered = 0;
  std::size_t duplicates = 0;
};

struct DatasetSplit {
  std::string name = "train";
  std::vector<Record> records;
  LoadStats stats;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

enum class DatasetFormat { snli_jsonl, mnli_jsonl, xnli_tsv, qqp_tsv, mrpc_tsv, generic_jsonl };

std::string_view to_string(DatasetFormat format);
DatasetFormat parse_format(std::string_view tag);

struct LoadOptions {
  std::string split_name = "train";
  bool skip_malformed = false;
  Diagnostics* diagnostics = nullptr;
};

// Reads a dataset file through the adapter for `format`. Texts are NFC-normalized.
// Rows without a gold label are dropped and counted. For xnli-tsv a non-empty
// `language` selects the rows of that language; elsewhere it tags the records.
DatasetSplit load_dataset(const std::filesystem::path& path, DatasetFormat format,
                          std::string_view language, const LoadOptions& options = {});

// Canonical JSON-lines form: {id, s1, s2, label, genre?, language}.
void write_jsonl(std::ostream& out, const DatasetSplit& split);
std::string to_jsonl_line(const Record& record);

// Task of the split's labels, or nullopt for an empty split. Throws DataError
// when labels from both tasks are mixed.
std::optional<Task> split_task(const DatasetSplit& split);

// Random halves partitioning `split`; the first gets the extra record on odd sizes.
// Each half keeps the source order.
std::pair<DatasetSplit, DatasetSplit> split_half(const DatasetSplit& split, std::uint64_t seed);

// Samples `n` records without replacement into a validation split; returns
// (reduced train, validation), both in source order.
std::pair<DatasetSplit, DatasetSplit> carve_validation(const DatasetSplit& train, std::size_t n,
                                                       std::uint64_t seed);

}  // namespace bident
