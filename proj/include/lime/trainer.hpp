#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lime/backend.hpp"
#include "lime/core.hpp"
#include "lime/labeler.hpp"

namespace lime {

enum class TrainerKind { reference_linear, transformer_finetune };

inline const char* to_string(TrainerKind kind) {
  return kind == TrainerKind::reference_linear ? "reference_linear"
                                               : "transformer_finetune";
}

inline constexpr const char* kDefaultFinetuneModelId = "bert-base-uncased";

struct TrainerConfig {
  TrainerKind kind = TrainerKind::reference_linear;
  int epochs = 4;
  std::optional<double> learning_rate;  // 0.1 linear, 2e-5 transformer
  int seed = 42;
  std::optional<std::string> model_id;

  double effective_learning_rate() const {
    if (learning_rate) return *learning_rate;
    return kind == TrainerKind::reference_linear ? 0.1 : 2e-5;
  }
};

inline void validate_trainer_config(const TrainerConfig& config) {
  if (config.epochs <= 0)
    throw Error("InvalidConfig", "epochs must be positive");
  if (config.learning_rate && !(*config.learning_rate > 0.0))
    throw Error("InvalidConfig", "learning_rate must be positive");
}

// Lowercased alphanumeric token counts, same tokenizer as the mock backend.
inline std::map<std::string, int> token_counts(const std::string& text) {
  std::map<std::string, int> counts;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      ++counts[std::move(current)];
      current.clear();
    }
  }
  if (!current.empty()) ++counts[std::move(current)];
  return counts;
}

// Multinomial logistic regression over token-frequency features.
// Zero-initialized, full-batch gradient descent; bit-deterministic for a
// fixed training set and config.
class LinearClassifier {
 public:
  LinearClassifier() = default;

  static LinearClassifier fit(
      const std::vector<std::pair<Document, std::size_t>>& training_set,
      std::size_t num_classes, int epochs, double learning_rate) {
    LinearClassifier model;
    model.num_classes_ = num_classes;

    std::set<std::string> vocab_set;
    for (const auto& [doc, label] : training_set)
      for (const auto& [token, count] : token_counts(doc.text))
        vocab_set.insert(token);
    model.vocab_.assign(vocab_set.begin(), vocab_set.end());
    for (std::size_t i = 0; i < model.vocab_.size(); ++i)
      model.index_[model.vocab_[i]] = i;

    const std::size_t dim = model.vocab_.size() + 1;  // + bias
    model.weights_.assign(num_classes * dim, 0.0);

    std::vector<std::vector<std::pair<std::size_t, double>>> features;
    std::vector<std::size_t> targets;
    features.reserve(training_set.size());
    for (const auto& [doc, label] : training_set) {
      features.push_back(model.featurize(doc.text));
      targets.push_back(label);
    }

    std::vector<double> gradient(num_classes * dim);
    const double scale = 1.0 / static_cast<double>(training_set.size());
    for (int epoch = 0; epoch < epochs; ++epoch) {
      std::fill(gradient.begin(), gradient.end(), 0.0);
      for (std::size_t s = 0; s < features.size(); ++s) {
        const auto probs = model.class_probs(features[s]);
        for (std::size_t k = 0; k < num_classes; ++k) {
          const double delta = probs[k] - (k == targets[s] ? 1.0 : 0.0);
          for (const auto& [j, value] : features[s])
            gradient[k * dim + j] += delta * value;
        }
      }
      for (std::size_t i = 0; i < model.weights_.size(); ++i)
        model.weights_[i] -= learning_rate * scale * gradient[i];
    }
    return model;
  }

  std::size_t predict(const std::string& text) const {
    const auto logits = class_logits(featurize(text));
    return argmax_lowest(logits);
  }

  std::size_t num_classes() const { return num_classes_; }

  nlohmann::json to_json() const {
    return {{"format", "lime-linear-v1"},
            {"num_classes", num_classes_},
            {"vocabulary", vocab_},
            {"weights", weights_}};
  }

  static LinearClassifier from_json(const nlohmann::json& j) {
    if (!j.contains("format") || j["format"] != "lime-linear-v1")
      throw Error("ParseError", "not a lime linear classifier file");
    LinearClassifier model;
    model.num_classes_ = j.at("num_classes").get<std::size_t>();
    model.vocab_ = j.at("vocabulary").get<std::vector<std::string>>();
    model.weights_ = j.at("weights").get<std::vector<double>>();
    if (model.weights_.size() != model.num_classes_ * (model.vocab_.size() + 1))
      throw Error("ParseError", "weight matrix shape mismatch");
    for (std::size_t i = 0; i < model.vocab_.size(); ++i)
      model.index_[model.vocab_[i]] = i;
    return model;
  }

 private:
  // Sparse (feature index, frequency) pairs plus the bias term.
  std::vector<std::pair<std::size_t, double>> featurize(
      const std::string& text) const {
    const auto counts = token_counts(text);
    double total = 0.0;
    for (const auto& [token, count] : counts) total += count;
    std::vector<std::pair<std::size_t, double>> features;
    if (total > 0.0) {
      for (const auto& [token, count] : counts) {
        const auto it = index_.find(token);
        if (it != index_.end()) features.emplace_back(it->second, count / total);
      }
    }
    features.emplace_back(vocab_.size(), 1.0);  // bias
    return features;
  }

  std::vector<double> class_logits(
      const std::vector<std::pair<std::size_t, double>>& features) const {
    const std::size_t dim = vocab_.size() + 1;
    std::vector<double> logits(num_classes_, 0.0);
    for (std::size_t k = 0; k < num_classes_; ++k)
      for (const auto& [j, value] : features)
        logits[k] += weights_[k * dim + j] * value;
    return logits;
  }

  std::vector<double> class_probs(
      const std::vector<std::pair<std::size_t, double>>& features) const {
    return compute_confidence(class_logits(features));
  }

  std::size_t num_classes_ = 0;
  std::vector<std::string> vocab_;
  std::map<std::string, std::size_t> index_;
  std::vector<double> weights_;  // num_classes x (|vocab| + 1), row-major
};

struct TrainedClassifier {
  TrainerKind kind = TrainerKind::reference_linear;
  std::size_t num_classes = 0;
  int seed = 42;
  int epochs = 4;
  std::size_t training_set_size = 0;
  LinearClassifier linear;      // reference_linear only
  std::string checkpoint_dir;   // transformer_finetune only
};

namespace detail {

inline std::string finetune_script() {
  const char* script = std::getenv("LIME_FINETUNE_SCRIPT");
  return script ? script : "tools/transformer_trainer.py";
}

inline TrainedClassifier finetune_transformer(
    const std::vector<std::pair<Document, std::size_t>>& training_set,
    std::size_t num_classes, const TrainerConfig& config) {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path();
  const fs::path train_path = dir / "lime_finetune_train.jsonl";
  const fs::path checkpoint =
      dir / ("lime_finetune_ckpt_" + std::to_string(config.seed));
  {
    std::ofstream out(train_path);
    for (const auto& [doc, label] : training_set) {
      nlohmann::json rec = {{"text", doc.text}, {"label", label}};
      out << rec.dump() << '\n';
    }
  }
  std::ostringstream cmd;
  cmd << "python3 " << finetune_script() << " train --model-id '"
      << config.model_id.value_or(kDefaultFinetuneModelId) << "' --train "
      << train_path << " --num-classes " << num_classes << " --epochs "
      << config.epochs << " --learning-rate "
      << config.effective_learning_rate() << " --seed " << config.seed
      << " --out " << checkpoint;
  const int rc = std::system(cmd.str().c_str());
  fs::remove(train_path);
  if (rc != 0)
    throw Error("BackendUnavailable",
                "transformer fine-tune subprocess failed (exit " +
                    std::to_string(rc) + ")");
  TrainedClassifier classifier;
  classifier.kind = TrainerKind::transformer_finetune;
  classifier.num_classes = num_classes;
  classifier.seed = config.seed;
  classifier.epochs = config.epochs;
  classifier.training_set_size = training_set.size();
  classifier.checkpoint_dir = checkpoint.string();
  return classifier;
}

inline std::vector<std::size_t> transformer_predict(
    const TrainedClassifier& classifier, const std::vector<Document>& docs) {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path();
  const fs::path in_path = dir / "lime_finetune_predict.jsonl";
  const fs::path out_path = dir / "lime_finetune_preds.txt";
  {
    std::ofstream out(in_path);
    for (const auto& doc : docs) {
      nlohmann::json rec = {{"text", doc.text}};
      out << rec.dump() << '\n';
    }
  }
  std::ostringstream cmd;
  cmd << "python3 " << finetune_script() << " predict --checkpoint "
      << classifier.checkpoint_dir << " --input " << in_path << " --output "
      << out_path;
  const int rc = std::system(cmd.str().c_str());
  fs::remove(in_path);
  if (rc != 0) {
    fs::remove(out_path);
    throw Error("BackendUnavailable",
                "transformer predict subprocess failed (exit " +
                    std::to_string(rc) + ")");
  }
  std::vector<std::size_t> predictions;
  std::ifstream in(out_path);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) predictions.push_back(std::stoul(line));
  fs::remove(out_path);
  if (predictions.size() != docs.size())
    throw Error("BackendUnavailable", "prediction count mismatch");
  return predictions;
}

}  // namespace detail

inline TrainedClassifier train(
    const std::vector<std::pair<Document, std::size_t>>& training_set,
    const TaskSpec& task, const TrainerConfig& config) {
  validate_task_spec(task);
  validate_trainer_config(config);
  if (training_set.empty())
    throw Error("EmptyTrainingSet", "no pseudo-labels to train on");
  std::set<std::size_t> distinct;
  for (const auto& [doc, label] : training_set) {
    if (label >= task.labels.size())
      throw Error("IndexOutOfRange",
                  "label index " + std::to_string(label) + " out of range");
    distinct.insert(label);
  }
  if (distinct.size() < 2)
    throw Error("SingleClassTrainingSet",
                "training set covers only one class; cannot fit a "
                "discriminative classifier");

  if (config.kind == TrainerKind::transformer_finetune)
    return detail::finetune_transformer(training_set, task.labels.size(),
                                        config);

  TrainedClassifier classifier;
  classifier.kind = TrainerKind::reference_linear;
  classifier.num_classes = task.labels.size();
  classifier.seed = config.seed;
  classifier.epochs = config.epochs;
  classifier.training_set_size = training_set.size();
  classifier.linear =
      LinearClassifier::fit(training_set, task.labels.size(), config.epochs,
                            config.effective_learning_rate());
  return classifier;
}

inline std::vector<std::size_t> predict(const TrainedClassifier& classifier,
                                        const std::vector<Document>& docs) {
  if (docs.empty()) throw Error("EmptyCorpus", "no documents to predict");
  if (classifier.kind == TrainerKind::transformer_finetune)
    return detail::transformer_predict(classifier, docs);
  std::vector<std::size_t> predictions;
  predictions.reserve(docs.size());
  for (const auto& doc : docs)
    predictions.push_back(classifier.linear.predict(doc.text));
  return predictions;
}

// Phase 2 end-to-end: train on retained pseudo-labels, then predict the
// whole corpus. Discarded documents still receive predictions.
inline std::vector<std::size_t> self_train_pipeline(
    const LabelingRun& run, const std::vector<Document>& docs,
    const TrainerConfig& config) {
  const auto retained = filter_retained(run);
  if (retained.empty())
    throw Error("NoRetainedLabels",
                "confidence threshold discarded every pseudo-label");
  std::map<std::string, const Document*> by_id;
  for (const auto& doc : docs) by_id[doc.id] = &doc;
  std::vector<std::pair<Document, std::size_t>> training_set;
  training_set.reserve(retained.size());
  for (const auto& [id, label] : retained) {
    const auto it = by_id.find(id);
    if (it == by_id.end())
      throw Error("UnknownDocument", "pseudo-label for unknown id '" + id + "'");
    training_set.emplace_back(*it->second, label);
  }
  return predict(train(training_set, run.task, config), docs);
}

}  // namespace lime
