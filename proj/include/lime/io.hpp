#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lime/backend.hpp"
#include "lime/core.hpp"
#include "lime/labeler.hpp"
#include "lime/metrics.hpp"

namespace lime {

using nlohmann::json;

inline json parse_json_line(const std::string& line, const std::string& path,
                            std::size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error("ParseError",
                path + ":" + std::to_string(line_no) + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Corpus: JSONL, one {"id", "text", "label"?} object per line.

inline std::vector<Document> load_corpus(const std::string& path,
                                         const TaskSpec& task) {
  validate_task_spec(task);
  std::ifstream in(path);
  if (!in) throw Error("FileNotFound", "cannot open corpus '" + path + "'");
  std::vector<Document> docs;
  std::map<std::string, std::size_t> seen;  // id -> first line
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json rec = parse_json_line(line, path, line_no);
    Document doc;
    if (!rec.contains("id") || !rec.contains("text"))
      throw Error("ParseError", path + ":" + std::to_string(line_no) +
                                    ": record needs 'id' and 'text'");
    doc.id = rec["id"].get<std::string>();
    doc.text = rec["text"].get<std::string>();
    if (doc.text.empty() || whitespace_only(doc.text))
      throw Error("ParseError", path + ":" + std::to_string(line_no) +
                                    ": empty text for id '" + doc.id + "'");
    if (auto [it, inserted] = seen.emplace(doc.id, line_no); !inserted)
      throw Error("DuplicateId", path + ":" + std::to_string(line_no) +
                                     ": id '" + doc.id +
                                     "' already used on line " +
                                     std::to_string(it->second));
    if (rec.contains("label") && !rec["label"].is_null()) {
      doc.gold_label = rec["label"].get<std::string>();
      if (std::find(task.labels.begin(), task.labels.end(), *doc.gold_label) ==
          task.labels.end())
        throw Error("UnknownGoldLabel",
                    path + ":" + std::to_string(line_no) + ": label '" +
                        *doc.gold_label + "' not in task '" + task.name + "'");
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

inline void save_corpus(const std::vector<Document>& docs,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot write '" + path + "'");
  for (const auto& doc : docs) {
    json rec = {{"id", doc.id}, {"text", doc.text}};
    if (doc.gold_label) rec["label"] = *doc.gold_label;
    out << rec.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Task spec: a single JSON object.

inline TaskSpec task_spec_from_json(const json& j) {
  TaskSpec spec;
  spec.name = j.value("name", "");
  spec.labels = j.at("labels").get<std::vector<std::string>>();
  spec.prompt_template = j.value("prompt_template", "");
  if (j.contains("verbalizer"))
    spec.verbalizer = j["verbalizer"].get<std::map<std::string, std::string>>();
  if (j.contains("hypothesis_overrides"))
    spec.hypothesis_overrides =
        j["hypothesis_overrides"].get<std::map<std::string, std::string>>();
  validate_task_spec(spec);
  return spec;
}

inline json task_spec_to_json(const TaskSpec& spec) {
  json j = {{"name", spec.name},
            {"labels", spec.labels},
            {"prompt_template", spec.prompt_template}};
  if (!spec.verbalizer.empty()) j["verbalizer"] = spec.verbalizer;
  if (!spec.hypothesis_overrides.empty())
    j["hypothesis_overrides"] = spec.hypothesis_overrides;
  return j;
}

inline TaskSpec load_task_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("FileNotFound", "cannot open task spec '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw Error("ParseError", path + ": " + e.what());
  }
  return task_spec_from_json(j);
}

inline void save_task_spec(const TaskSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot write '" + path + "'");
  out << task_spec_to_json(spec).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Labeling runs: a JSON header line followed by one record per document.
// Probabilities round-trip bit-exactly (shortest-exact decimal encoding).

inline json backend_config_to_json(const BackendConfig& config) {
  json j = {{"kind", to_string(config.kind)},
            {"max_premise_tokens", config.max_premise_tokens},
            {"entailment_mode", to_string(config.entailment_mode)},
            {"batch_size", config.batch_size}};
  if (config.model_id) j["model_id"] = *config.model_id;
  return j;
}

inline BackendConfig backend_config_from_json(const json& j) {
  BackendConfig config;
  const auto kind = j.value("kind", "mock_lexical");
  if (kind == "mock_lexical")
    config.kind = BackendKind::mock_lexical;
  else if (kind == "nli_model")
    config.kind = BackendKind::nli_model;
  else
    throw Error("ParseError", "unknown backend kind '" + kind + "'");
  if (j.contains("model_id")) config.model_id = j["model_id"].get<std::string>();
  config.max_premise_tokens = j.value("max_premise_tokens", 512);
  const auto mode = j.value("entailment_mode", "entail_vs_contradiction");
  if (mode == "entail_vs_contradiction")
    config.entailment_mode = EntailmentMode::entail_vs_contradiction;
  else if (mode == "raw_entailment")
    config.entailment_mode = EntailmentMode::raw_entailment;
  else
    throw Error("ParseError", "unknown entailment mode '" + mode + "'");
  config.batch_size = j.value("batch_size", 32);
  validate_backend_config(config);
  return config;
}

inline void save_run(const LabelingRun& run, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot write '" + path + "'");
  json header = {{"format", "lime-run-v1"},
                 {"task", task_spec_to_json(run.task)},
                 {"backend", backend_config_to_json(run.backend)},
                 {"threshold", run.threshold}};
  out << header.dump() << '\n';
  for (const auto& label : run.pseudo_labels) {
    json probs = json::object();
    for (std::size_t k = 0; k < run.task.labels.size(); ++k)
      probs[run.task.labels[k]] = label.confidences[k];
    json rec = {{"id", label.doc_id},
                {"pseudo_label", run.task.labels[label.label_index]},
                {"confidence", label.confidences[label.label_index]},
                {"probs", probs},
                {"retained", label.retained}};
    out << rec.dump() << '\n';
  }
}

inline LabelingRun load_run(const std::string& path,
                            const std::optional<TaskSpec>& expected_task =
                                std::nullopt) {
  std::ifstream in(path);
  if (!in) throw Error("FileNotFound", "cannot open run file '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.empty())
    throw Error("ParseError", path + ": missing header line");
  const json header = parse_json_line(line, path, 1);
  if (header.value("format", "") != "lime-run-v1")
    throw Error("ParseError", path + ": not a lime run file");

  LabelingRun run;
  run.task = task_spec_from_json(header.at("task"));
  run.backend = backend_config_from_json(header.at("backend"));
  run.threshold = header.at("threshold").get<double>();
  if (expected_task && expected_task->labels != run.task.labels)
    throw Error("LabelSetMismatch",
                path + ": run was produced under task '" + run.task.name +
                    "' with a different label set");

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json rec = parse_json_line(line, path, line_no);
    PseudoLabel label;
    try {
      label.doc_id = rec.at("id").get<std::string>();
      const auto name = rec.at("pseudo_label").get<std::string>();
      const auto it =
          std::find(run.task.labels.begin(), run.task.labels.end(), name);
      if (it == run.task.labels.end())
        throw Error("ParseError", path + ":" + std::to_string(line_no) +
                                      ": pseudo_label '" + name +
                                      "' not in task label set");
      label.label_index = static_cast<std::size_t>(it - run.task.labels.begin());
      const auto& probs = rec.at("probs");
      for (const auto& task_label : run.task.labels)
        label.confidences.push_back(probs.at(task_label).get<double>());
      label.retained = rec.at("retained").get<bool>();
    } catch (const json::exception& e) {
      throw Error("ParseError",
                  path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    run.pseudo_labels.push_back(std::move(label));
  }
  return run;
}

// ---------------------------------------------------------------------------
// Predictions, metrics, plot data.

inline void save_predictions(const std::vector<Document>& docs,
                             const std::vector<std::size_t>& predictions,
                             const TaskSpec& task, const std::string& path) {
  if (docs.size() != predictions.size())
    throw Error("LengthMismatch", "predictions not aligned with corpus");
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot write '" + path + "'");
  for (std::size_t i = 0; i < docs.size(); ++i) {
    json rec = {{"id", docs[i].id}, {"label", task.labels[predictions[i]]}};
    out << rec.dump() << '\n';
  }
}

// Returns label indices aligned with `docs`; every document must have a
// prediction record.
inline std::vector<std::size_t> load_predictions(
    const std::string& path, const std::vector<Document>& docs,
    const TaskSpec& task) {
  std::ifstream in(path);
  if (!in) throw Error("FileNotFound", "cannot open predictions '" + path + "'");
  std::map<std::string, std::size_t> by_id;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json rec = parse_json_line(line, path, line_no);
    const auto id = rec.at("id").get<std::string>();
    const auto name = rec.at("label").get<std::string>();
    const auto it = std::find(task.labels.begin(), task.labels.end(), name);
    if (it == task.labels.end())
      throw Error("LabelSetMismatch", path + ":" + std::to_string(line_no) +
                                          ": label '" + name +
                                          "' not in task label set");
    by_id[id] = static_cast<std::size_t>(it - task.labels.begin());
  }
  std::vector<std::size_t> predictions;
  predictions.reserve(docs.size());
  for (const auto& doc : docs) {
    const auto it = by_id.find(doc.id);
    if (it == by_id.end())
      throw Error("MissingPrediction", "no prediction for id '" + doc.id + "'");
    predictions.push_back(it->second);
  }
  return predictions;
}

inline json eval_report_to_json(const EvalReport& report) {
  json per_class = json::array();
  for (const auto& m : report.per_class)
    per_class.push_back(
        {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}});
  return {{"micro_f1", report.micro_f1},
          {"macro_f1", report.macro_f1},
          {"per_class", per_class},
          {"confusion", report.confusion},
          {"support", report.support}};
}

inline void save_metrics(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot write '" + path + "'");
  out << eval_report_to_json(report).dump(2) << '\n';
}

// CSV reals carry 9 significant digits.
inline std::string fmt_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

inline void save_histogram_csv(const HistogramSeries& series,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot write '" + path + "'");
  out << "lower,upper,count,accuracy_in_bin\n";
  for (const auto& bin : series.bins) {
    out << fmt_real(bin.lower) << ',' << fmt_real(bin.upper) << ','
        << bin.count << ',';
    if (bin.accuracy) out << fmt_real(*bin.accuracy);
    out << '\n';
  }
}

inline void save_sweep_csv(const SweepSeries& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot write '" + path + "'");
  out << "threshold,retained_count,self_train_micro_f1,self_train_macro_f1\n";
  for (const auto& row : series.rows) {
    out << fmt_real(row.threshold) << ',' << row.retained_count << ',';
    if (row.micro_f1) out << fmt_real(*row.micro_f1);
    out << ',';
    if (row.macro_f1) out << fmt_real(*row.macro_f1);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Run manifests: config plus content hashes of the inputs, so identical
// manifests imply identical outputs for deterministic configurations.

inline std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("FileNotFound", "cannot hash '" + path + "'");
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(hash));
  return hex;
}

inline void save_manifest(const json& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("IoError", "cannot write '" + path + "'");
  out << manifest.dump(2) << '\n';
}

}  // namespace lime
