#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lime/backend.hpp"

namespace lime {

// Adapter for a pretrained NLI model. Inference runs out of process in a
// helper script (tools/nli_scorer.py); pairs go out as JSONL, probabilities
// come back one per line. The script path can be overridden with
// LIME_NLI_SCRIPT, and LIME_MODEL_CACHE names a local checkpoint cache.
class NliModelBackend : public EntailmentBackend {
 public:
  explicit NliModelBackend(BackendConfig config) : config_(std::move(config)) {
    if (!config_.model_id) config_.model_id = kDefaultNliModelId;
    const char* script = std::getenv("LIME_NLI_SCRIPT");
    script_ = script ? script : "tools/nli_scorer.py";
  }

  double score_pair(const std::string& premise,
                    const std::string& hypothesis) const override {
    return score_batch({{premise, hypothesis}}).front();
  }

  std::vector<double> score_batch(
      const std::vector<ScorePair>& pairs) const override {
    if (pairs.empty()) throw Error("EmptyBatch", "score_batch of empty list");
    for (const auto& [premise, hypothesis] : pairs) {
      if (premise.empty() || hypothesis.empty())
        throw Error("EmptyInput", "premise and hypothesis must be non-empty");
    }
    // One accelerator behind the scenes; serialize callers.
    std::lock_guard<std::mutex> lock(mutex_);

    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path();
    const auto tag = std::to_string(reinterpret_cast<std::uintptr_t>(this));
    const fs::path in_path = dir / ("lime_nli_in_" + tag + ".jsonl");
    const fs::path out_path = dir / ("lime_nli_out_" + tag + ".txt");

    {
      std::ofstream in(in_path);
      for (const auto& [premise, hypothesis] : pairs) {
        nlohmann::json rec = {{"premise", premise},
                              {"hypothesis", hypothesis}};
        in << rec.dump() << '\n';
      }
    }

    std::ostringstream cmd;
    cmd << "python3 " << script_ << " --model-id '" << *config_.model_id
        << "' --mode " << to_string(config_.entailment_mode)
        << " --max-premise-tokens " << config_.max_premise_tokens
        << " --batch-size " << config_.batch_size << " --input " << in_path
        << " --output " << out_path;
    const int rc = std::system(cmd.str().c_str());
    fs::remove(in_path);
    if (rc != 0) {
      fs::remove(out_path);
      throw Error("BackendUnavailable",
                  "NLI scorer subprocess failed (exit " + std::to_string(rc) +
                      "); model '" + *config_.model_id + "'");
    }

    std::vector<double> probs;
    std::ifstream out(out_path);
    std::string line;
    while (std::getline(out, line)) {
      if (line.empty()) continue;
      probs.push_back(std::stod(line));
    }
    fs::remove(out_path);
    if (probs.size() != pairs.size())
      throw Error("BackendUnavailable",
                  "NLI scorer returned " + std::to_string(probs.size()) +
                      " scores for " + std::to_string(pairs.size()) + " pairs");
    for (double p : probs)
      if (!(p >= 0.0 && p <= 1.0))
        throw Error("BackendUnavailable", "score out of [0,1] from NLI scorer");
    return probs;
  }

  std::string identity() const override {
    return "nli_model:" + *config_.model_id + ":" +
           to_string(config_.entailment_mode);
  }

 private:
  BackendConfig config_;
  std::string script_;
  mutable std::mutex mutex_;
};

inline std::unique_ptr<EntailmentBackend> make_backend(
    const BackendConfig& config) {
  validate_backend_config(config);
  switch (config.kind) {
    case BackendKind::mock_lexical:
      return std::make_unique<MockLexicalBackend>();
    case BackendKind::nli_model:
      return std::make_unique<NliModelBackend>(config);
  }
  throw Error("InvalidConfig", "unknown backend kind");
}

}  // namespace lime
