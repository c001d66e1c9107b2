#pragma once

#include <cctype>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lime/core.hpp"

namespace lime {

enum class BackendKind { mock_lexical, nli_model };
enum class EntailmentMode { entail_vs_contradiction, raw_entailment };

// Checkpoint used by default when kind = nli_model.
inline constexpr const char* kDefaultNliModelId = "facebook/bart-large-mnli";

struct BackendConfig {
  BackendKind kind = BackendKind::mock_lexical;
  std::optional<std::string> model_id;
  int max_premise_tokens = 512;
  EntailmentMode entailment_mode = EntailmentMode::entail_vs_contradiction;
  int batch_size = 32;

  bool operator==(const BackendConfig&) const = default;
};

inline const char* to_string(BackendKind kind) {
  return kind == BackendKind::mock_lexical ? "mock_lexical" : "nli_model";
}

inline const char* to_string(EntailmentMode mode) {
  return mode == EntailmentMode::entail_vs_contradiction
             ? "entail_vs_contradiction"
             : "raw_entailment";
}

inline void validate_backend_config(const BackendConfig& config) {
  if (config.max_premise_tokens <= 0)
    throw Error("InvalidConfig", "max_premise_tokens must be positive");
  if (config.batch_size <= 0)
    throw Error("InvalidConfig", "batch_size must be positive");
}

using ScorePair = std::pair<std::string, std::string>;

// Contract for scoring (premise, hypothesis) pairs. Implementations are
// read-only after construction; score calls may come from multiple threads.
class EntailmentBackend {
 public:
  virtual ~EntailmentBackend() = default;

  // Returns an entailment probability in [0,1]. Deterministic for fixed
  // config and inputs.
  virtual double score_pair(const std::string& premise,
                            const std::string& hypothesis) const = 0;

  // Element i equals score_pair applied to pair i.
  virtual std::vector<double> score_batch(
      const std::vector<ScorePair>& pairs) const {
    if (pairs.empty()) throw Error("EmptyBatch", "score_batch of empty list");
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& [premise, hypothesis] : pairs)
      out.push_back(score_pair(premise, hypothesis));
    return out;
  }

  // Stable description of the backend, recorded in run manifests.
  virtual std::string identity() const = 0;
};

// Lowercased alphanumeric token set. Runs of non-alphanumeric characters
// separate tokens.
inline std::set<std::string> token_set(const std::string& text) {
  std::set<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.insert(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.insert(std::move(current));
  return tokens;
}

// Deterministic test backend: Jaccard similarity of lowercase token sets.
// Symmetric, always in [0,1], no model or network involved.
class MockLexicalBackend : public EntailmentBackend {
 public:
  double score_pair(const std::string& premise,
                    const std::string& hypothesis) const override {
    if (premise.empty() || hypothesis.empty())
      throw Error("EmptyInput", "premise and hypothesis must be non-empty");
    const auto a = token_set(premise);
    const auto b = token_set(hypothesis);
    std::size_t intersection = 0;
    for (const auto& tok : a)
      if (b.contains(tok)) ++intersection;
    const std::size_t uni = a.size() + b.size() - intersection;
    if (uni == 0) return 1.0;  // both tokenize to the empty set
    return static_cast<double>(intersection) / static_cast<double>(uni);
  }

  std::string identity() const override { return "mock_lexical"; }
};

std::unique_ptr<EntailmentBackend> make_backend(const BackendConfig& config);

}  // namespace lime
