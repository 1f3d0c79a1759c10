#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bident/cleaning.hpp"
#include "bident/cli.hpp"
#include "bident/corpus.hpp"
#include "bident/error.hpp"
#include "bident/evaluation.hpp"
#include "bident/extraction.hpp"
#include "bident/report.hpp"
#include "bident/scoring.hpp"
#include "bident/tokenizer.hpp"

namespace py = pybind11;
using namespace bident;

namespace {

// JSON crosses the boundary as text; the json module does the conversion.
py::object to_python(const nlohmann::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::handle& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

LabelDistribution to_distribution(const py::dict& d) {
  std::vector<std::pair<std::string, double>> entries;
  for (const auto& [k, v] : d) entries.emplace_back(k.cast<std::string>(), v.cast<double>());
  return LabelDistribution(std::move(entries));
}

py::dict from_distribution(const LabelDistribution& d) {
  py::dict out;
  for (const auto& [cls, p] : d.entries()) out[py::str(cls)] = p;
  return out;
}

std::vector<SequencePair> to_pairs(const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<SequencePair> out;
  out.reserve(pairs.size());
  for (const auto& [a, b] : pairs) out.push_back({a, b});
  return out;
}

ScoreOptions score_options(std::size_t workers, std::size_t batch_size, bool renormalize) {
  ScoreOptions options;
  options.workers = workers;
  options.batch_size = batch_size;
  options.check.renormalize = renormalize;
  return options;
}

std::vector<ExtractionRecord> to_extraction_records(const py::list& records) {
  std::vector<ExtractionRecord> out;
  for (const auto& r : records) out.push_back(extraction_record_from_json(from_python(r)));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "C++ core of the bident toolkit";
  m.attr("__version__") = "0.1.0";

  static py::exception<Error> error(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<DataError>(m, "DataError", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());
  py::register_exception<ScoringError>(m, "ScoringError", error.ptr());

  py::class_<Record>(m, "Record")
      .def(py::init([](std::string id, std::string s1, std::string s2, std::string label, std::string language) {
             Record r;
             r.id = std::move(id);
             r.s1 = std::move(s1);
             r.s2 = std::move(s2);
             r.label = std::move(label);
             r.language = std::move(language);
             return r;
           }),
           py::arg("id"), py::arg("s1"), py::arg("s2"), py::arg("label"), py::arg("language") = "")
      .def_readonly("id", &Record::id)
      .def_readonly("s1", &Record::s1)
      .def_readonly("s2", &Record::s2)
      .def_readonly("label", &Record::label)
      .def_readonly("genre", &Record::genre)
      .def_readonly("language", &Record::language)
      .def_readonly("duplicate", &Record::duplicate)
      .def("__repr__", [](const Record& r) { return "Record(" + to_jsonl_line(r) + ")"; });

  py::class_<DatasetSplit>(m, "DatasetSplit")
      .def(py::init([](std::string name, std::vector<Record> records) {
             DatasetSplit s;
             s.name = std::move(name);
             s.records = std::move(records);
             return s;
           }),
           py::arg("name"), py::arg("records"))
      .def_readonly("name", &DatasetSplit::name)
      .def_readonly("records", &DatasetSplit::records)
      .def_property_readonly("stats",
                             [](const DatasetSplit& s) {
                               return py::dict(py::arg("rows") = s.stats.rows,
                                               py::arg("dropped_no_label") = s.stats.dropped_no_label,
                                               py::arg("skipped_malformed") = s.stats.skipped_malformed,
                                               py::arg("language_filtered") = s.stats.language_filtered,
                                               py::arg("duplicates") = s.stats.duplicates);
                             })
      .def("__len__", &DatasetSplit::size);

  m.def(
      "load_dataset",
      [](const std::filesystem::path& path, const std::string& format, const std::string& language,
         bool skip_malformed) {
        LoadOptions options;
        options.skip_malformed = skip_malformed;
        return load_dataset(path, parse_format(format), language, options);
      },
      py::arg("path"), py::arg("format"), py::arg("language") = "", py::arg("skip_malformed") = false);
  m.def("split_half", &split_half, py::arg("split"), py::arg("seed"));
  m.def("carve_validation", &carve_validation, py::arg("train"), py::arg("n"), py::arg("seed"));

  py::class_<Scorer>(m, "Scorer")
      .def_property_readonly("descriptor", [](const Scorer& s) { return to_python(to_json(s.descriptor())); })
      .def_property_readonly("pairs_scored", &Scorer::pairs_scored)
      .def_property_readonly("truncation_count", &Scorer::truncation_count);

  m.def(
      "oracle_table",
      [](const std::vector<std::tuple<std::string, std::string, py::dict>>& entries, const std::string& task) {
        std::vector<OracleEntry> table;
        for (const auto& [s1, s2, dist] : entries) table.push_back({{s1, s2}, to_distribution(dist)});
        return std::unique_ptr<Scorer>(StaticOracle::from_entries(std::move(table), parse_task(task)));
      },
      py::arg("entries"), py::arg("task") = "nli-3way");
  m.def(
      "oracle_table_file",
      [](const std::filesystem::path& path, const std::string& task) {
        return std::unique_ptr<Scorer>(StaticOracle::from_table(path, parse_task(task)));
      },
      py::arg("path"), py::arg("task") = "nli-3way");
  m.def(
      "oracle_subsequence",
      [](const std::string& task) { return std::unique_ptr<Scorer>(StaticOracle::subsequence(parse_task(task))); },
      py::arg("task") = "nli-3way");
  m.def(
      "local_model",
      [](const std::filesystem::path& path) { return std::unique_ptr<Scorer>(std::make_unique<LocalModelScorer>(path)); },
      py::arg("path"));
  m.def(
      "remote",
      [](const std::string& url, const std::string& task, const std::string& model_id,
         std::optional<std::string> token, int max_attempts, int initial_backoff_ms) {
        RemoteOptions options;
        options.url = url;
        options.task = parse_task(task);
        options.model_id = model_id.empty() ? url : model_id;
        options.bearer_token = std::move(token);
        options.max_attempts = max_attempts;
        options.initial_backoff = std::chrono::milliseconds(initial_backoff_ms);
        return std::unique_ptr<Scorer>(std::make_unique<RemoteScorer>(options));
      },
      py::arg("url"), py::arg("task") = "nli-3way", py::arg("model_id") = "", py::arg("token") = py::none(),
      py::arg("max_attempts") = 3, py::arg("initial_backoff_ms") = 200);

  m.def(
      "score",
      [](Scorer& scorer, const std::vector<std::pair<std::string, std::string>>& pairs, std::size_t workers,
         std::size_t batch_size, bool renormalize) {
        std::vector<LabelDistribution> dists;
        {
          py::gil_scoped_release release;
          dists = score_batch(scorer, to_pairs(pairs), score_options(workers, batch_size, renormalize));
        }
        py::list out;
        for (const auto& d : dists) out.append(from_distribution(d));
        return out;
      },
      py::arg("scorer"), py::arg("pairs"), py::arg("workers") = 1, py::arg("batch_size") = 32,
      py::arg("renormalize") = false);

  m.def(
      "decide",
      [](const py::dict& distribution, const std::string& rule, const std::string& positive) {
        return decide(to_distribution(distribution), DecisionRule::parse(rule), positive);
      },
      py::arg("distribution"), py::arg("rule"), py::arg("positive"));

  m.def(
      "extract",
      [](const DatasetSplit& split, Scorer& scorer, const std::string& rule, const std::string& keep,
         std::size_t workers, std::size_t batch_size, bool negatives) {
        ExtractionOptions options;
        options.scoring = score_options(workers, batch_size, false);
        options.collect_negatives = negatives;
        ExtractionResult result;
        {
          py::gil_scoped_release release;
          result = extract(split, scorer, DecisionRule::parse(rule), parse_keep(keep), options);
        }
        nlohmann::ordered_json j{{"records", nlohmann::ordered_json::array()},
                                 {"negatives", nlohmann::ordered_json::array()},
                                 {"counts", to_json(result.counts)}};
        for (const auto& r : result.records) j["records"].push_back(to_json(r));
        for (const auto& r : result.negatives) j["negatives"].push_back(to_json(r));
        return to_python(j);
      },
      py::arg("split"), py::arg("scorer"), py::arg("rule") = "argmax", py::arg("keep") = "entailment",
      py::arg("workers") = 1, py::arg("batch_size") = 32, py::arg("negatives") = false);

  m.def(
      "clean",
      [](const DatasetSplit& split, Scorer& scorer, const std::string& rule, bool both_directions,
         std::size_t workers, std::size_t batch_size) {
        CleaningOptions options;
        options.scoring = score_options(workers, batch_size, false);
        options.both_directions = both_directions;
        CleaningResult result;
        {
          py::gil_scoped_release release;
          result = clean(split, scorer, DecisionRule::parse(rule), options);
        }
        nlohmann::ordered_json removed = nlohmann::ordered_json::array();
        for (const auto& r : result.removed) removed.push_back(to_json(r));
        py::dict out;
        out["cleaned"] = py::cast(result.cleaned);
        out["removed"] = to_python(removed);
        out["counts"] = to_python(to_json(result.counts));
        return out;
      },
      py::arg("split"), py::arg("scorer"), py::arg("rule") = "argmax", py::arg("both_directions") = false,
      py::arg("workers") = 1, py::arg("batch_size") = 32);

  m.def(
      "confusion",
      [](const std::vector<std::string>& gold, const std::vector<std::string>& predicted,
         const std::string& positive) {
        const auto counts = confusion(gold, predicted, positive);
        return to_python(to_json(counts, metrics(counts)));
      },
      py::arg("gold"), py::arg("predicted"), py::arg("positive"));

  m.def("levenshtein", py::overload_cast<std::string_view, std::string_view>(&levenshtein), py::arg("a"),
        py::arg("b"));
  m.def("normalized_edit_distance", &normalized_edit_distance, py::arg("a"), py::arg("b"));
  m.def("token_length_ratio", &token_length_ratio, py::arg("a"), py::arg("b"));
  m.def(
      "similarity_stats",
      [](const py::list& records) { return to_python(to_json(similarity_stats(to_extraction_records(records)))); },
      py::arg("records"));

  m.def(
      "overlap",
      [](const std::map<std::string, std::vector<std::string>>& ids_by_language) {
        std::map<std::string, std::vector<ExtractionRecord>> runs;
        for (const auto& [language, ids] : ids_by_language) {
          auto& run = runs[language];
          for (const auto& id : ids) {
            ExtractionRecord r;
            r.source_id = id;
            r.language = language;
            run.push_back(std::move(r));
          }
        }
        return to_python(to_json(overlap(runs)));
      },
      py::arg("ids_by_language"));

  m.def(
      "sample_for_validation",
      [](const py::list& records, std::size_t n, std::uint64_t seed) {
        const auto sheet = sample_for_validation(to_extraction_records(records), n, seed);
        std::ostringstream tsv;
        write_tsv(tsv, sheet);
        return tsv.str();
      },
      py::arg("records"), py::arg("n"), py::arg("seed"), "Returns the annotation sheet as TSV text.");
  m.def(
      "hand_precision",
      [](const std::string& tsv) {
        std::istringstream in(tsv);
        return hand_precision(read_tsv(in));
      },
      py::arg("sheet_tsv"));

  m.def(
      "render_report",
      [](const py::list& manifests) {
        std::vector<ReportEntry> entries;
        for (const auto& manifest : manifests) entries.push_back(report_entry_from_manifest(from_python(manifest)));
        const auto report = render_report(entries);
        return py::make_tuple(to_text(report), to_python(to_json(report)));
      },
      py::arg("manifests"), "Returns (text, json) for a list of run manifests.");

  m.def(
      "encode",
      [](const std::string& tokenizer_id, const std::string& s1, const std::string& s2, std::size_t max_length) {
        const auto e = PairTokenizer::from_id(tokenizer_id).encode({s1, s2}, max_length);
        py::dict out;
        out["input_ids"] = e.input_ids;
        out["token_type_ids"] = e.token_type_ids;
        out["attention_mask"] = e.attention_mask;
        out["truncated"] = e.truncated;
        return out;
      },
      py::arg("tokenizer_id"), py::arg("s1"), py::arg("s2"), py::arg("max_length"),
      "Model inputs for one pair, as the local backend builds them.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int status;
        {
          py::gil_scoped_release release;
          status = cli::run(args, out, err);
        }
        return py::make_tuple(status, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line in-process; returns (exit status, stdout, stderr).");
}
