#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "lime/io.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("lime_io_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const lime::Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_CASE("load_corpus reads records in file order") {
  TempDir dir;
  const auto path = dir.file("corpus.jsonl");
  write_file(path,
             R"({"id":"a","text":"first doc","label":"alpha"})"
             "\n"
             R"({"id":"b","text":"second doc"})"
             "\n");
  const auto task = lime_test::keyword_task(2);
  const auto docs = lime::load_corpus(path, task);
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].id == "a");
  CHECK(docs[0].gold_label == "alpha");
  CHECK(docs[1].id == "b");
  CHECK_FALSE(docs[1].gold_label.has_value());
}

TEST_CASE("load_corpus rejects unknown gold labels") {
  TempDir dir;
  const auto path = dir.file("corpus.jsonl");
  write_file(path, R"({"id":"a","text":"doc","label":"Sprots"})" "\n");
  const auto task = lime_test::keyword_task(2);
  CHECK(error_code([&] { lime::load_corpus(path, task); }) ==
        "UnknownGoldLabel");
}

TEST_CASE("load_corpus reports duplicate ids with the line number") {
  TempDir dir;
  const auto path = dir.file("corpus.jsonl");
  std::string content;
  for (int i = 1; i <= 6; ++i)
    content += R"({"id":"doc)" + std::to_string(i) + R"(","text":"t"})" "\n";
  content += R"({"id":"doc3","text":"t"})" "\n";  // line 7
  write_file(path, content);
  const auto task = lime_test::keyword_task(2);
  try {
    lime::load_corpus(path, task);
    FAIL("expected DuplicateId");
  } catch (const lime::Error& e) {
    CHECK(e.code() == "DuplicateId");
    CHECK(std::string(e.what()).find(":7") != std::string::npos);
  }
}

TEST_CASE("load_corpus reports parse errors with line numbers") {
  TempDir dir;
  const auto path = dir.file("corpus.jsonl");
  write_file(path, R"({"id":"a","text":"ok"})" "\nnot json\n");
  const auto task = lime_test::keyword_task(2);
  try {
    lime::load_corpus(path, task);
    FAIL("expected ParseError");
  } catch (const lime::Error& e) {
    CHECK(e.code() == "ParseError");
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("load_corpus rejects empty text") {
  TempDir dir;
  const auto path = dir.file("corpus.jsonl");
  write_file(path, R"({"id":"a","text":"  "})" "\n");
  CHECK(error_code([&] {
          lime::load_corpus(path, lime_test::keyword_task(2));
        }) == "ParseError");
}

TEST_CASE("task specs round-trip through serialization") {
  TempDir dir;
  lime::TaskSpec task;
  task.name = "yelp";
  task.labels = {"Positive", "Negative"};
  task.prompt_template = "It was {label}.";
  task.verbalizer = {{"Positive", "good"}, {"Negative", "bad"}};
  task.hypothesis_overrides = {{"Positive", "It was good."},
                               {"Negative", "It was bad."}};
  const auto path = dir.file("task.json");
  lime::save_task_spec(task, path);
  CHECK(lime::load_task_spec(path) == task);
}

TEST_CASE("bundled task specs load and match the published prompts") {
  const auto yelp = lime::load_task_spec("tasks/yelp.json");
  REQUIRE(yelp.labels.size() == 2);
  CHECK(yelp.hypothesis_overrides.at("Positive") == "It was good.");
  CHECK(yelp.hypothesis_overrides.at("Negative") == "It was bad.");

  const auto agnews = lime::load_task_spec("tasks/agnews.json");
  CHECK(agnews.labels.size() == 4);
  CHECK(agnews.prompt_template == "The text is about {label}.");
  CHECK(lime::build_hypotheses(agnews).hypotheses[1] ==
        "The text is about Sports.");

  CHECK(lime::load_task_spec("tasks/20news.json").labels.size() == 5);
  CHECK(lime::load_task_spec("tasks/dbpedia.json").labels.size() == 14);
}

TEST_CASE("partial overrides in a task file are rejected") {
  TempDir dir;
  const auto path = dir.file("task.json");
  write_file(path, R"({
    "name": "broken",
    "labels": ["A", "B"],
    "prompt_template": "{label}",
    "hypothesis_overrides": {"A": "only one"}
  })");
  CHECK(error_code([&] { lime::load_task_spec(path); }) == "PartialOverrides");
}

TEST_CASE("labeling runs round-trip bit-exactly") {
  TempDir dir;
  const auto task = lime_test::keyword_task(3);
  const auto docs = lime_test::keyword_corpus(task, 1);
  const auto run = lime::label_corpus(docs, task, lime::BackendConfig{}, 0.4);
  const auto path = dir.file("run.jsonl");
  lime::save_run(run, path);
  const auto loaded = lime::load_run(path, task);
  CHECK(loaded.task == run.task);
  CHECK(loaded.threshold == run.threshold);
  REQUIRE(loaded.pseudo_labels.size() == run.pseudo_labels.size());
  for (std::size_t i = 0; i < run.pseudo_labels.size(); ++i)
    CHECK(loaded.pseudo_labels[i] == run.pseudo_labels[i]);

  // Saving the loaded run again reproduces the same bytes.
  const auto path2 = dir.file("run2.jsonl");
  lime::save_run(loaded, path2);
  CHECK(read_file(path) == read_file(path2));
}

TEST_CASE("loading a run under a different label set fails") {
  TempDir dir;
  const auto task = lime_test::keyword_task(2);
  const auto docs = lime_test::keyword_corpus(task, 2);
  const auto run = lime::label_corpus(docs, task, lime::BackendConfig{}, 0.5);
  const auto path = dir.file("run.jsonl");
  lime::save_run(run, path);
  const auto other = lime_test::keyword_task(3);
  CHECK(error_code([&] { lime::load_run(path, other); }) ==
        "LabelSetMismatch");
}

TEST_CASE("loading a truncated run file fails with ParseError") {
  TempDir dir;
  const auto task = lime_test::keyword_task(2);
  const auto docs = lime_test::keyword_corpus(task, 2);
  const auto run = lime::label_corpus(docs, task, lime::BackendConfig{}, 0.5);
  const auto path = dir.file("run.jsonl");
  lime::save_run(run, path);
  auto content = read_file(path);
  write_file(path, content.substr(0, content.size() - 30));
  CHECK(error_code([&] { lime::load_run(path); }) == "ParseError");
}

TEST_CASE("predictions round-trip through save and load") {
  TempDir dir;
  const auto task = lime_test::keyword_task(2);
  const auto docs = lime_test::keyword_corpus(task, 3);
  const std::vector<std::size_t> predictions = {0, 1, 0, 1, 1, 0};
  const auto path = dir.file("preds.jsonl");
  lime::save_predictions(docs, predictions, task, path);
  CHECK(lime::load_predictions(path, docs, task) == predictions);
}

TEST_CASE("histogram and sweep CSVs carry the documented headers") {
  TempDir dir;
  const auto task = lime_test::keyword_task(2);
  const auto docs = lime_test::keyword_corpus(task, 5);
  const auto run = lime::label_corpus(docs, task, lime::BackendConfig{}, 0.0);
  const auto hist_path = dir.file("histogram.csv");
  lime::save_histogram_csv(lime::confidence_histogram(run), hist_path);
  CHECK(read_file(hist_path).starts_with("lower,upper,count,accuracy_in_bin\n"));

  const auto series =
      lime::threshold_sweep(docs, task, lime::BackendConfig{}, {}, {0.0, 0.8});
  const auto sweep_path = dir.file("sweep.csv");
  lime::save_sweep_csv(series, sweep_path);
  const auto csv = read_file(sweep_path);
  CHECK(csv.starts_with(
      "threshold,retained_count,self_train_micro_f1,self_train_macro_f1\n"));
  // The zero-retained row has empty F1 fields, not zeros.
  CHECK(csv.find("0.8,0,,\n") != std::string::npos);
}

TEST_CASE("eval reports serialize to JSON with all fields") {
  TempDir dir;
  const auto report = lime::compute_f1({0, 0, 1, 1}, {0, 1, 1, 1}, 2);
  const auto path = dir.file("metrics.json");
  lime::save_metrics(report, path);
  std::ifstream in(path);
  lime::json j;
  in >> j;
  CHECK(j["micro_f1"] == 0.75);
  CHECK(j["per_class"].size() == 2);
  CHECK(j["confusion"][0][0] == 1);
  CHECK(j["support"] == lime::json({2, 2}));
}
