#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "lime/core.hpp"
#include "lime/nli_backend.hpp"

namespace lime {

// Phase 1 output: one pseudo-label per corpus document, in input order.
struct LabelingRun {
  TaskSpec task;
  BackendConfig backend;
  double threshold = 0.5;
  std::vector<PseudoLabel> pseudo_labels;
};

// Hypothesis i is the override for label i when overrides exist, otherwise
// the prompt template with {label} replaced by verbalizer(label i).
inline HypothesisSet build_hypotheses(const TaskSpec& task) {
  validate_task_spec(task);
  HypothesisSet set;
  set.hypotheses.reserve(task.labels.size());
  for (const auto& label : task.labels) {
    if (!task.hypothesis_overrides.empty()) {
      set.hypotheses.push_back(task.hypothesis_overrides.at(label));
      continue;
    }
    const auto verbalized = task.verbalizer.contains(label)
                                ? task.verbalizer.at(label)
                                : label;
    std::string hypothesis = task.prompt_template;
    const auto pos = hypothesis.find(kLabelPlaceholder);
    hypothesis.replace(pos, kLabelPlaceholder.size(), verbalized);
    set.hypotheses.push_back(std::move(hypothesis));
  }
  return set;
}

// Softmax over raw entailment scores. Temperature 1.0 reproduces the plain
// formula exp(p_i) / sum_j exp(p_j); other values are for experimentation.
inline std::vector<double> compute_confidence(const std::vector<double>& scores,
                                              double temperature = 1.0) {
  if (scores.empty()) throw Error("EmptyScores", "no scores to normalize");
  if (!(temperature > 0.0))
    throw Error("InvalidConfig", "temperature must be positive");
  // Max-shifted for numeric stability; softmax is shift invariant.
  const double peak = scores[argmax_lowest(scores)];
  std::vector<double> out;
  out.reserve(scores.size());
  double total = 0.0;
  for (double s : scores) {
    const double e = std::exp((s - peak) / temperature);
    out.push_back(e);
    total += e;
  }
  for (double& v : out) v /= total;
  return out;
}

inline PseudoLabel assign_pseudo_label(const Document& doc,
                                       const EntailmentScores& scores,
                                       double threshold,
                                       double temperature = 1.0) {
  if (scores.probs.size() < 2)
    throw Error("DimensionMismatch",
                "need scores for at least 2 classes, got " +
                    std::to_string(scores.probs.size()));
  PseudoLabel label;
  label.doc_id = doc.id;
  label.confidences = compute_confidence(scores.probs, temperature);
  label.label_index = argmax_lowest(label.confidences);
  label.retained = label.confidences[label.label_index] >= threshold;
  return label;
}

// Scores every (document, hypothesis) pair and assigns pseudo-labels.
// Parallel over documents when workers > 1; output order always matches
// input order.
inline LabelingRun label_corpus(const std::vector<Document>& docs,
                                const TaskSpec& task,
                                const BackendConfig& backend_config,
                                double threshold, double temperature = 1.0,
                                unsigned workers = 1) {
  validate_task_spec(task);
  if (task.labels.size() < 2)
    throw Error("TooFewClasses",
                "classification needs at least 2 labels, task '" + task.name +
                    "' has " + std::to_string(task.labels.size()));
  if (docs.empty()) throw Error("EmptyCorpus", "no documents to label");
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw Error("InvalidConfig", "threshold must be in [0,1]");

  const auto hypotheses = build_hypotheses(task);
  const auto backend = make_backend(backend_config);
  const std::size_t n = task.labels.size();

  LabelingRun run;
  run.task = task;
  run.backend = backend_config;
  run.threshold = threshold;
  run.pseudo_labels.resize(docs.size());

  auto label_range = [&](std::size_t begin, std::size_t end) {
    const std::size_t batch_docs =
        std::max<std::size_t>(1, backend_config.batch_size / n);
    for (std::size_t chunk = begin; chunk < end; chunk += batch_docs) {
      const std::size_t chunk_end = std::min(chunk + batch_docs, end);
      std::vector<ScorePair> pairs;
      pairs.reserve((chunk_end - chunk) * n);
      for (std::size_t d = chunk; d < chunk_end; ++d)
        for (const auto& hyp : hypotheses.hypotheses)
          pairs.emplace_back(docs[d].text, hyp);
      const auto scores = backend->score_batch(pairs);
      for (std::size_t d = chunk; d < chunk_end; ++d) {
        EntailmentScores doc_scores;
        doc_scores.probs.assign(scores.begin() + (d - chunk) * n,
                                scores.begin() + (d - chunk + 1) * n);
        run.pseudo_labels[d] =
            assign_pseudo_label(docs[d], doc_scores, threshold, temperature);
      }
    }
  };

  if (workers <= 1 || docs.size() < 2) {
    label_range(0, docs.size());
  } else {
    const unsigned count = std::min<unsigned>(workers, docs.size());
    const std::size_t stride = (docs.size() + count - 1) / count;
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < count; ++w) {
      const std::size_t begin = w * stride;
      const std::size_t end = std::min(begin + stride, docs.size());
      if (begin >= end) break;
      threads.emplace_back(label_range, begin, end);
    }
    for (auto& t : threads) t.join();
  }
  return run;
}

// Entries with retained = true, input order preserved.
inline std::vector<std::pair<std::string, std::size_t>> filter_retained(
    const LabelingRun& run) {
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& label : run.pseudo_labels)
    if (label.retained) kept.emplace_back(label.doc_id, label.label_index);
  return kept;
}

}  // namespace lime
