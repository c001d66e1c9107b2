#include <doctest.h>

#include <map>
#include <random>
#include <set>
#include <vector>

#include "lime/trainer.hpp"
#include "synthetic.hpp"

using lime::Document;
using lime::TrainerConfig;

namespace {

std::vector<std::pair<Document, std::size_t>> training_pairs(
    const std::vector<Document>& docs, const lime::TaskSpec& task) {
  std::vector<std::pair<Document, std::size_t>> pairs;
  for (const auto& doc : docs)
    pairs.emplace_back(doc, lime_test::gold_index(doc, task));
  return pairs;
}

// Exhaustive check that no token appears in two classes, which is what
// makes the corpus linearly separable in token-frequency features.
bool class_vocabularies_disjoint(const std::vector<Document>& docs,
                                 const lime::TaskSpec& task) {
  std::map<std::string, std::size_t> owner;
  for (const auto& doc : docs) {
    const auto cls = lime_test::gold_index(doc, task);
    for (const auto& [token, count] : lime::token_counts(doc.text)) {
      auto [it, inserted] = owner.emplace(token, cls);
      if (!inserted && it->second != cls) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("linear trainer fits a separable corpus perfectly") {
  const auto task = lime_test::keyword_task(2);
  const auto docs = lime_test::keyword_corpus(task, 20);
  REQUIRE(class_vocabularies_disjoint(docs, task));
  const auto classifier = lime::train(training_pairs(docs, task), task, {});
  const auto predictions = lime::predict(classifier, docs);
  for (std::size_t i = 0; i < docs.size(); ++i)
    CHECK(task.labels[predictions[i]] == *docs[i].gold_label);
}

TEST_CASE("train rejects empty and single-class training sets") {
  const auto task = lime_test::keyword_task(2);
  const auto docs = lime_test::keyword_corpus(task, 3);
  CHECK_THROWS_WITH_AS(lime::train({}, task, {}), doctest::Contains("Empty"),
                       lime::Error);
  std::vector<std::pair<Document, std::size_t>> one_class;
  for (const auto& doc : docs) one_class.emplace_back(doc, 0);
  try {
    lime::train(one_class, task, {});
    FAIL("expected SingleClassTrainingSet");
  } catch (const lime::Error& e) {
    CHECK(e.code() == "SingleClassTrainingSet");
  }
}

TEST_CASE("predict covers every document and is deterministic") {
  const auto task = lime_test::keyword_task(3);
  const auto docs = lime_test::keyword_corpus(task, 8);
  const auto classifier = lime::train(training_pairs(docs, task), task, {});
  const auto a = lime::predict(classifier, docs);
  const auto b = lime::predict(classifier, docs);
  CHECK(a.size() == docs.size());
  CHECK(a == b);

  // Identical documents get identical predictions.
  std::vector<Document> twins = {{"t1", docs[0].text, std::nullopt},
                                 {"t2", docs[0].text, std::nullopt}};
  const auto twin_preds = lime::predict(classifier, twins);
  CHECK(twin_preds[0] == twin_preds[1]);
}

TEST_CASE("two training runs produce identical prediction vectors") {
  const auto task = lime_test::keyword_task(4);
  const auto docs = lime_test::keyword_corpus(task, 10);
  const auto pairs = training_pairs(docs, task);
  const auto first = lime::predict(lime::train(pairs, task, {}), docs);
  const auto second = lime::predict(lime::train(pairs, task, {}), docs);
  CHECK(first == second);
}

TEST_CASE("self_train_pipeline predicts discarded documents too") {
  const auto task = lime_test::keyword_task(2);
  const auto docs = lime_test::keyword_corpus(task, 15);
  auto run = lime::label_corpus(docs, task, lime::BackendConfig{}, 0.0);
  // Discard a third of the pseudo-labels by hand.
  for (std::size_t i = 0; i < run.pseudo_labels.size(); i += 3)
    run.pseudo_labels[i].retained = false;
  const auto predictions = lime::self_train_pipeline(run, docs, {});
  CHECK(predictions.size() == docs.size());
}

TEST_CASE("self_train_pipeline reproduces perfect pseudo-labels") {
  const auto task = lime_test::keyword_task(3);
  const auto docs = lime_test::keyword_corpus(task, 12);
  const auto run = lime::label_corpus(docs, task, lime::BackendConfig{}, 0.0);
  const auto predictions = lime::self_train_pipeline(run, docs, {});
  for (std::size_t i = 0; i < docs.size(); ++i)
    CHECK(predictions[i] == run.pseudo_labels[i].label_index);
}

TEST_CASE("self_train_pipeline reports when everything was discarded") {
  const auto task = lime_test::keyword_task(2);
  const auto docs = lime_test::keyword_corpus(task, 5);
  auto run = lime::label_corpus(docs, task, lime::BackendConfig{}, 0.0);
  for (auto& label : run.pseudo_labels) label.retained = false;
  try {
    lime::self_train_pipeline(run, docs, {});
    FAIL("expected NoRetainedLabels");
  } catch (const lime::Error& e) {
    CHECK(e.code() == "NoRetainedLabels");
  }
}

TEST_CASE("relabeling classes by a permutation permutes predictions") {
  const auto task = lime_test::keyword_task(3);
  const auto docs = lime_test::keyword_corpus(task, 10);

  lime::TaskSpec permuted = task;
  permuted.labels = {task.labels[1], task.labels[2], task.labels[0]};
  // old index k -> new index of the same label name
  const std::vector<std::size_t> to_new = {2, 0, 1};

  auto pairs = training_pairs(docs, task);
  auto permuted_pairs = pairs;
  for (auto& [doc, label] : permuted_pairs) label = to_new[label];

  const auto base = lime::predict(lime::train(pairs, task, {}), docs);
  const auto mapped =
      lime::predict(lime::train(permuted_pairs, permuted, {}), docs);
  for (std::size_t i = 0; i < docs.size(); ++i)
    CHECK(mapped[i] == to_new[base[i]]);
}

TEST_CASE("linear classifier round-trips through JSON") {
  const auto task = lime_test::keyword_task(2);
  const auto docs = lime_test::keyword_corpus(task, 6);
  const auto classifier = lime::train(training_pairs(docs, task), task, {});
  const auto restored =
      lime::LinearClassifier::from_json(classifier.linear.to_json());
  for (const auto& doc : docs)
    CHECK(restored.predict(doc.text) == classifier.linear.predict(doc.text));
}

TEST_CASE("trainer config validation") {
  TrainerConfig config;
  config.epochs = 0;
  CHECK_THROWS_AS(lime::validate_trainer_config(config), lime::Error);
  config.epochs = 4;
  config.learning_rate = -1.0;
  CHECK_THROWS_AS(lime::validate_trainer_config(config), lime::Error);
  CHECK(TrainerConfig{}.effective_learning_rate() == 0.1);
  TrainerConfig transformer;
  transformer.kind = lime::TrainerKind::transformer_finetune;
  CHECK(transformer.effective_learning_rate() == 2e-5);
}
