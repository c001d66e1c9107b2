#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lime/core.hpp"
#include "lime/labeler.hpp"
#include "lime/trainer.hpp"

namespace lime {

struct PerClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::vector<PerClassMetrics> per_class;
  std::vector<std::vector<std::int64_t>> confusion;  // [gold][pred]
  std::vector<std::int64_t> support;                 // per-class gold counts
};

// Micro-F1 from the global confusion matrix (equals accuracy for complete
// single-label predictions); macro-F1 as the unweighted per-class mean.
// Classes absent from both gold and predictions contribute F1 = 0.
inline EvalReport compute_f1(const std::vector<std::size_t>& gold,
                             const std::vector<std::size_t>& pred,
                             std::size_t num_classes) {
  if (gold.size() != pred.size())
    throw Error("LengthMismatch",
                "gold has " + std::to_string(gold.size()) + " entries, pred " +
                    std::to_string(pred.size()));
  if (gold.empty()) throw Error("EmptyCorpus", "no predictions to score");
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (gold[i] >= num_classes || pred[i] >= num_classes)
      throw Error("IndexOutOfRange",
                  "label index out of range at position " + std::to_string(i));

  EvalReport report;
  report.confusion.assign(num_classes,
                          std::vector<std::int64_t>(num_classes, 0));
  report.support.assign(num_classes, 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++report.confusion[gold[i]][pred[i]];
    ++report.support[gold[i]];
  }

  std::int64_t correct = 0;
  double macro_sum = 0.0;
  for (std::size_t k = 0; k < num_classes; ++k) {
    const std::int64_t tp = report.confusion[k][k];
    std::int64_t predicted = 0, actual = report.support[k];
    for (std::size_t g = 0; g < num_classes; ++g) predicted += report.confusion[g][k];
    correct += tp;
    PerClassMetrics m;
    m.precision = predicted > 0 ? static_cast<double>(tp) / predicted : 0.0;
    m.recall = actual > 0 ? static_cast<double>(tp) / actual : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    macro_sum += m.f1;
    report.per_class.push_back(m);
  }
  report.micro_f1 = static_cast<double>(correct) / gold.size();
  report.macro_f1 = macro_sum / num_classes;
  return report;
}

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  std::int64_t count = 0;
  std::optional<double> accuracy;  // absent without gold labels
};

struct HistogramSeries {
  double bin_width = 0.05;
  std::vector<HistogramBin> bins;
};

// Fixed-width left-closed bins over [0,1]; the final bin is closed on both
// ends so confidence 1.0 lands in [0.95, 1.00].
inline HistogramSeries confidence_histogram(
    const LabelingRun& run,
    const std::optional<std::vector<std::size_t>>& gold = std::nullopt) {
  if (gold && gold->size() != run.pseudo_labels.size())
    throw Error("LengthMismatch", "gold labels not aligned with corpus");
  constexpr double kWidth = 0.05;
  const std::size_t num_bins = 20;
  HistogramSeries series;
  series.bin_width = kWidth;
  series.bins.resize(num_bins);
  std::vector<std::int64_t> correct(num_bins, 0);
  for (std::size_t b = 0; b < num_bins; ++b) {
    series.bins[b].lower = b * kWidth;
    series.bins[b].upper = (b + 1) * kWidth;
  }
  for (std::size_t i = 0; i < run.pseudo_labels.size(); ++i) {
    const auto& label = run.pseudo_labels[i];
    const double conf = label.confidences[label.label_index];
    auto bin = static_cast<std::size_t>(conf / kWidth);
    if (bin >= num_bins) bin = num_bins - 1;
    ++series.bins[bin].count;
    if (gold && (*gold)[i] == label.label_index) ++correct[bin];
  }
  if (gold) {
    for (std::size_t b = 0; b < num_bins; ++b)
      if (series.bins[b].count > 0)
        series.bins[b].accuracy =
            static_cast<double>(correct[b]) / series.bins[b].count;
  }
  return series;
}

struct SweepRow {
  double threshold = 0.0;
  std::int64_t retained_count = 0;
  std::optional<double> micro_f1;  // absent when nothing retained or
  std::optional<double> macro_f1;  // training is impossible for the row
};

struct SweepSeries {
  std::vector<SweepRow> rows;
};

inline std::size_t gold_index_or_throw(const Document& doc,
                                       const TaskSpec& task) {
  if (!doc.gold_label)
    throw Error("MissingGoldLabels",
                "document '" + doc.id + "' has no gold label");
  const auto it =
      std::find(task.labels.begin(), task.labels.end(), *doc.gold_label);
  if (it == task.labels.end())
    throw Error("UnknownGoldLabel",
                "gold label '" + *doc.gold_label + "' not in task");
  return static_cast<std::size_t>(it - task.labels.begin());
}

// One self-training evaluation per threshold, reusing a single scoring
// pass (scores do not depend on the threshold). Rows where training is
// impossible report absent F1 rather than aborting the sweep.
inline SweepSeries threshold_sweep(const std::vector<Document>& docs,
                                   const TaskSpec& task,
                                   const BackendConfig& backend,
                                   const TrainerConfig& trainer_config,
                                   const std::vector<double>& thresholds,
                                   double temperature = 1.0,
                                   unsigned workers = 1) {
  if (thresholds.empty()) throw Error("EmptyThresholds", "no thresholds given");
  for (double t : thresholds)
    if (!(t >= 0.0 && t <= 1.0))
      throw Error("InvalidConfig", "threshold must be in [0,1]");

  std::vector<std::size_t> gold;
  gold.reserve(docs.size());
  for (const auto& doc : docs) gold.push_back(gold_index_or_throw(doc, task));

  auto run = label_corpus(docs, task, backend, 0.0, temperature, workers);

  SweepSeries series;
  for (double threshold : thresholds) {
    for (auto& label : run.pseudo_labels)
      label.retained = label.confidences[label.label_index] >= threshold;
    SweepRow row;
    row.threshold = threshold;
    row.retained_count =
        static_cast<std::int64_t>(filter_retained(run).size());
    if (row.retained_count > 0) {
      try {
        const auto predictions = self_train_pipeline(run, docs, trainer_config);
        const auto report = compute_f1(gold, predictions, task.labels.size());
        row.micro_f1 = report.micro_f1;
        row.macro_f1 = report.macro_f1;
      } catch (const Error& e) {
        if (e.code() != "SingleClassTrainingSet" &&
            e.code() != "NoRetainedLabels")
          throw;
      }
    }
    series.rows.push_back(row);
  }
  return series;
}

}  // namespace lime
