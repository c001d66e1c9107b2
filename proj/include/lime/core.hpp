#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lime {

// Error with a stable machine-readable code plus a human message.
// The code is what tests and the CLI dispatch on.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

inline constexpr std::string_view kLabelPlaceholder = "{label}";

// A classification task: ordered class labels plus the hypothesis
// construction recipe (prompt template, optional verbalizer, optional
// full per-class hypothesis overrides).
struct TaskSpec {
  std::string name;
  std::vector<std::string> labels;
  std::string prompt_template;
  std::map<std::string, std::string> verbalizer;            // empty = identity
  std::map<std::string, std::string> hypothesis_overrides;  // empty = none

  bool operator==(const TaskSpec&) const = default;
};

struct Document {
  std::string id;
  std::string text;
  std::optional<std::string> gold_label;

  bool operator==(const Document&) const = default;
};

// Hypotheses aligned index-for-index with TaskSpec::labels.
struct HypothesisSet {
  std::vector<std::string> hypotheses;
};

// Raw per-class entailment probabilities for one document. These are
// independent pairwise probabilities; they need not sum to one.
struct EntailmentScores {
  std::vector<double> probs;
};

struct PseudoLabel {
  std::string doc_id;
  std::size_t label_index = 0;
  std::vector<double> confidences;  // softmax over scores, sums to 1
  bool retained = false;

  bool operator==(const PseudoLabel&) const = default;
};

// Smallest index attaining the maximum. Deterministic tie-break.
inline std::size_t argmax_lowest(const std::vector<double>& values) {
  if (values.empty()) throw Error("EmptyScores", "argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

inline bool whitespace_only(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

// Counts non-overlapping occurrences of `needle` in `haystack`.
inline std::size_t count_occurrences(std::string_view haystack,
                                     std::string_view needle) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

// Checks every TaskSpec invariant and returns the spec unchanged.
// Throws Error with codes: EmptyLabelList, EmptyLabel, DuplicateLabel,
// PartialOverrides, MissingPlaceholder.
inline const TaskSpec& validate_task_spec(const TaskSpec& spec) {
  if (spec.labels.empty())
    throw Error("EmptyLabelList", "task '" + spec.name + "' has no labels");
  std::set<std::string> seen;
  for (const auto& label : spec.labels) {
    if (label.empty() || whitespace_only(label))
      throw Error("EmptyLabel", "task '" + spec.name + "' has an empty label");
    if (!seen.insert(label).second)
      throw Error("DuplicateLabel", "label '" + label + "' appears twice");
  }
  if (!spec.hypothesis_overrides.empty()) {
    for (const auto& label : spec.labels) {
      if (!spec.hypothesis_overrides.contains(label))
        throw Error("PartialOverrides",
                    "hypothesis_overrides must cover all labels or none; "
                    "missing '" + label + "'");
    }
    for (const auto& [label, hyp] : spec.hypothesis_overrides) {
      if (std::find(spec.labels.begin(), spec.labels.end(), label) ==
          spec.labels.end())
        throw Error("PartialOverrides",
                    "hypothesis_overrides names unknown label '" + label + "'");
      if (hyp.empty())
        throw Error("PartialOverrides",
                    "empty hypothesis override for '" + label + "'");
    }
  } else {
    if (count_occurrences(spec.prompt_template, kLabelPlaceholder) != 1)
      throw Error("MissingPlaceholder",
                  "prompt_template must contain the placeholder " +
                      std::string(kLabelPlaceholder) + " exactly once");
  }
  return spec;
}

}  // namespace lime
