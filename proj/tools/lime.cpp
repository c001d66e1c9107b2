// lime: weakly-supervised text classification via entailment pseudo-labels.
//
// Subcommands: label, train, eval, sweep, run. Data goes to files under
// --out; logs go to stderr. Exit codes: 0 success, 2 usage error, 1 runtime.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lime/lime.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string task_path;
  std::string corpus_path;
  std::string out_dir;
  std::string backend = "mock";
  std::optional<std::string> model_id;
  double threshold = 0.50;
  double temperature = 1.0;
  std::string trainer = "linear";
  int seed = 42;
  int epochs = 4;
  std::optional<double> learning_rate;
  unsigned workers = 1;
};

lime::BackendConfig backend_config(const CommonOpts& opts) {
  lime::BackendConfig config;
  config.kind = opts.backend == "nli" ? lime::BackendKind::nli_model
                                      : lime::BackendKind::mock_lexical;
  if (config.kind == lime::BackendKind::nli_model)
    config.model_id = opts.model_id.value_or(lime::kDefaultNliModelId);
  return config;
}

lime::TrainerConfig trainer_config(const CommonOpts& opts) {
  lime::TrainerConfig config;
  config.kind = opts.trainer == "transformer"
                    ? lime::TrainerKind::transformer_finetune
                    : lime::TrainerKind::reference_linear;
  config.epochs = opts.epochs;
  config.learning_rate = opts.learning_rate;
  config.seed = opts.seed;
  if (config.kind == lime::TrainerKind::transformer_finetune)
    config.model_id = opts.model_id.value_or(lime::kDefaultFinetuneModelId);
  return config;
}

void add_task_corpus_flags(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--task", opts.task_path, "task spec JSON")->required();
  cmd->add_option("--corpus", opts.corpus_path, "corpus JSONL")->required();
  cmd->add_option("--out", opts.out_dir, "output directory")->required();
}

void add_backend_flags(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--backend", opts.backend, "entailment backend")
      ->check(CLI::IsMember({"mock", "nli"}))
      ->capture_default_str();
  cmd->add_option("--model-id", opts.model_id, "model checkpoint id");
  cmd->add_option("--temperature", opts.temperature, "confidence temperature")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--workers", opts.workers, "scoring fan-out")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_trainer_flags(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--trainer", opts.trainer, "classifier family")
      ->check(CLI::IsMember({"linear", "transformer"}))
      ->capture_default_str();
  cmd->add_option("--seed", opts.seed, "random seed")->capture_default_str();
  cmd->add_option("--epochs", opts.epochs, "training epochs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--learning-rate", opts.learning_rate, "learning rate")
      ->check(CLI::PositiveNumber);
}

std::vector<std::size_t> gold_indices(const std::vector<lime::Document>& docs,
                                      const lime::TaskSpec& task) {
  std::vector<std::size_t> gold;
  gold.reserve(docs.size());
  for (const auto& doc : docs)
    gold.push_back(lime::gold_index_or_throw(doc, task));
  return gold;
}

bool has_gold(const std::vector<lime::Document>& docs) {
  return std::all_of(docs.begin(), docs.end(),
                     [](const auto& d) { return d.gold_label.has_value(); });
}

lime::json base_manifest(const std::string& subcommand,
                         const CommonOpts& opts) {
  lime::json manifest = {
      {"subcommand", subcommand},
      {"task", {{"path", opts.task_path},
                {"hash", lime::fnv1a64_file(opts.task_path)}}},
      {"corpus", {{"path", opts.corpus_path},
                  {"hash", lime::fnv1a64_file(opts.corpus_path)}}},
      {"seed", opts.seed},
      {"workers", opts.workers}};
  return manifest;
}

int cmd_label(const CommonOpts& opts) {
  const auto task = lime::load_task_spec(opts.task_path);
  const auto docs = lime::load_corpus(opts.corpus_path, task);
  const auto backend = backend_config(opts);
  const auto run = lime::label_corpus(docs, task, backend, opts.threshold,
                                      opts.temperature, opts.workers);
  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);
  lime::save_run(run, (out / "pseudo_labels.jsonl").string());

  std::optional<std::vector<std::size_t>> gold;
  if (has_gold(docs)) gold = gold_indices(docs, task);
  lime::save_histogram_csv(lime::confidence_histogram(run, gold),
                           (out / "histogram.csv").string());

  auto manifest = base_manifest("label", opts);
  manifest["backend"] = lime::backend_config_to_json(backend);
  manifest["threshold"] = opts.threshold;
  manifest["temperature"] = opts.temperature;
  lime::save_manifest(manifest, (out / "manifest.json").string());

  const auto retained = lime::filter_retained(run).size();
  std::cerr << "labeled " << docs.size() << " documents, retained " << retained
            << " at threshold " << opts.threshold << "\n";
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& run_path) {
  const auto task = lime::load_task_spec(opts.task_path);
  const auto docs = lime::load_corpus(opts.corpus_path, task);
  const auto run = lime::load_run(run_path, task);
  const auto config = trainer_config(opts);

  const auto retained = lime::filter_retained(run);
  if (retained.empty())
    throw lime::Error("NoRetainedLabels",
                      "every pseudo-label was discarded; lower --threshold");
  std::map<std::string, const lime::Document*> by_id;
  for (const auto& doc : docs) by_id[doc.id] = &doc;
  std::vector<std::pair<lime::Document, std::size_t>> training_set;
  for (const auto& [id, label] : retained) {
    const auto it = by_id.find(id);
    if (it == by_id.end())
      throw lime::Error("UnknownDocument",
                        "pseudo-label for unknown id '" + id + "'");
    training_set.emplace_back(*it->second, label);
  }
  const auto classifier = lime::train(training_set, task, config);

  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);
  if (classifier.kind == lime::TrainerKind::reference_linear) {
    std::ofstream model_out(out / "classifier.json");
    model_out << classifier.linear.to_json().dump() << '\n';
  }
  const auto predictions = lime::predict(classifier, docs);
  lime::save_predictions(docs, predictions, task,
                         (out / "predictions.jsonl").string());

  auto manifest = base_manifest("train", opts);
  manifest["run"] = {{"path", run_path}, {"hash", lime::fnv1a64_file(run_path)}};
  manifest["trainer"] = {{"kind", lime::to_string(config.kind)},
                         {"epochs", config.epochs},
                         {"learning_rate", config.effective_learning_rate()},
                         {"seed", config.seed}};
  lime::save_manifest(manifest, (out / "manifest.json").string());
  std::cerr << "trained on " << training_set.size() << " pseudo-labels, wrote "
            << predictions.size() << " predictions\n";
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& predictions_path) {
  const auto task = lime::load_task_spec(opts.task_path);
  const auto docs = lime::load_corpus(opts.corpus_path, task);
  if (!has_gold(docs))
    throw lime::Error("MissingGoldLabels",
                      "evaluation needs gold labels on every document");
  const auto predictions = lime::load_predictions(predictions_path, docs, task);
  const auto report =
      lime::compute_f1(gold_indices(docs, task), predictions,
                       task.labels.size());
  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);
  lime::save_metrics(report, (out / "metrics.json").string());
  auto manifest = base_manifest("eval", opts);
  manifest["predictions"] = {{"path", predictions_path},
                             {"hash", lime::fnv1a64_file(predictions_path)}};
  lime::save_manifest(manifest, (out / "manifest.json").string());
  std::cerr << "micro_f1=" << report.micro_f1 << " macro_f1=" << report.macro_f1
            << "\n";
  return 0;
}

int cmd_sweep(const CommonOpts& opts, const std::vector<double>& thresholds) {
  const auto task = lime::load_task_spec(opts.task_path);
  const auto docs = lime::load_corpus(opts.corpus_path, task);
  const auto series =
      lime::threshold_sweep(docs, task, backend_config(opts),
                            trainer_config(opts), thresholds, opts.temperature,
                            opts.workers);
  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);
  lime::save_sweep_csv(series, (out / "sweep.csv").string());
  auto manifest = base_manifest("sweep", opts);
  manifest["backend"] = lime::backend_config_to_json(backend_config(opts));
  manifest["thresholds"] = thresholds;
  manifest["temperature"] = opts.temperature;
  lime::save_manifest(manifest, (out / "manifest.json").string());
  std::cerr << "swept " << thresholds.size() << " thresholds\n";
  return 0;
}

int cmd_run(const CommonOpts& opts) {
  const auto task = lime::load_task_spec(opts.task_path);
  const auto docs = lime::load_corpus(opts.corpus_path, task);
  const auto backend = backend_config(opts);
  const auto run = lime::label_corpus(docs, task, backend, opts.threshold,
                                      opts.temperature, opts.workers);
  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);
  lime::save_run(run, (out / "pseudo_labels.jsonl").string());

  std::optional<std::vector<std::size_t>> gold;
  if (has_gold(docs)) gold = gold_indices(docs, task);
  lime::save_histogram_csv(lime::confidence_histogram(run, gold),
                           (out / "histogram.csv").string());

  const auto config = trainer_config(opts);
  std::vector<std::size_t> predictions;
  try {
    predictions = lime::self_train_pipeline(run, docs, config);
  } catch (const lime::Error& e) {
    if (e.code() == "NoRetainedLabels")
      throw lime::Error("NoRetainedLabels",
                        "every pseudo-label fell under the confidence "
                        "threshold; lower --threshold and rerun");
    throw;
  }
  lime::save_predictions(docs, predictions, task,
                         (out / "predictions.jsonl").string());
  if (gold) {
    const auto report =
        lime::compute_f1(*gold, predictions, task.labels.size());
    lime::save_metrics(report, (out / "metrics.json").string());
    std::cerr << "micro_f1=" << report.micro_f1
              << " macro_f1=" << report.macro_f1 << "\n";
  }

  auto manifest = base_manifest("run", opts);
  manifest["backend"] = lime::backend_config_to_json(backend);
  manifest["threshold"] = opts.threshold;
  manifest["temperature"] = opts.temperature;
  manifest["trainer"] = {{"kind", lime::to_string(config.kind)},
                         {"epochs", config.epochs},
                         {"learning_rate", config.effective_learning_rate()},
                         {"seed", config.seed}};
  lime::save_manifest(manifest, (out / "manifest.json").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weakly-supervised text classification with entailment "
               "pseudo-labels"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string run_path;
  std::string predictions_path;
  std::vector<double> thresholds;

  auto* label = app.add_subcommand("label", "phase 1: assign pseudo-labels");
  add_task_corpus_flags(label, opts);
  add_backend_flags(label, opts);
  label->add_option("--threshold", opts.threshold, "confidence threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  auto* train = app.add_subcommand("train",
                                   "phase 2: train on retained pseudo-labels");
  add_task_corpus_flags(train, opts);
  add_trainer_flags(train, opts);
  train->add_option("--run", run_path, "pseudo-label file from `label`")
      ->required();
  train->add_option("--model-id", opts.model_id, "model checkpoint id");

  auto* eval = app.add_subcommand("eval", "score predictions against gold");
  add_task_corpus_flags(eval, opts);
  eval->add_option("--predictions", predictions_path, "predictions JSONL")
      ->required();

  auto* sweep = app.add_subcommand("sweep", "self-training F1 per threshold");
  add_task_corpus_flags(sweep, opts);
  add_backend_flags(sweep, opts);
  add_trainer_flags(sweep, opts);
  sweep->add_option("--thresholds", thresholds, "comma-separated thresholds")
      ->required()
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));

  auto* run = app.add_subcommand("run", "full pipeline: label, train, eval");
  add_task_corpus_flags(run, opts);
  add_backend_flags(run, opts);
  add_trainer_flags(run, opts);
  run->add_option("--threshold", opts.threshold, "confidence threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (label->parsed()) return cmd_label(opts);
    if (train->parsed()) return cmd_train(opts, run_path);
    if (eval->parsed()) return cmd_eval(opts, predictions_path);
    if (sweep->parsed()) return cmd_sweep(opts, thresholds);
    if (run->parsed()) return cmd_run(opts);
  } catch (const lime::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "InternalError: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
