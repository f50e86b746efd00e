#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "grace/common.hpp"
#include "grace/embedding.hpp"
#include "grace/evolution.hpp"
#include "grace/scoring.hpp"
#include "grace/synergy.hpp"

#include "json.hpp"

namespace grace {

// All stage configuration with documented defaults. Unknown keys are
// rejected at parse time.
struct PipelineConfig {
  std::string backend = "sim";  // "sim" | "llvm"
  std::uint64_t seed = 7;
  unsigned jobs = 1;

  // Simulated backend corpus. The training default keeps 3 * per_family at
  // or above twice the contrastive batch size, which training requires.
  std::size_t sim_train_per_family = 12;
  std::size_t sim_test_per_family = 4;

  // LLVM backend.
  std::string llvm_manifest;       // training corpus manifest (JSON)
  std::string llvm_test_manifest;  // held-out corpus manifest (JSON)
  std::string llvm_pass_list;      // newline-delimited pass flags
  std::string llvm_opt_bin;        // empty -> $GRACE_OPT_BIN or "opt"
  int llvm_timeout_s = 60;

  ScoreWeights weights;

  // Synergy-guided sequence search.
  std::size_t search_budget = 200;
  SearchConfig search;

  // Candidate selection.
  std::size_t k_top = 100;
  std::size_t histogram_bins = 20;

  // Contrastive training.
  TrainConfig training;

  // Clustering. k is clamped to |training corpus| / 5 on small corpora.
  std::size_t k = 100;
  std::size_t kmeans_restarts = 10;

  // Coreset evolution.
  GaConfig ga;
};

namespace config_detail {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void reject_unknown(const nlohmann::json& j,
                           const std::set<std::string>& known,
                           const std::string& scope) {
  for (const auto& [key, _] : j.items())
    if (!known.count(key))
      throw GraceError("config: unknown key '" + key + "' in " + scope);
}

}  // namespace config_detail

inline PipelineConfig parse_config(const nlohmann::json& j) {
  using config_detail::read;
  PipelineConfig c;
  config_detail::reject_unknown(
      j,
      {"backend", "seed", "jobs", "sim", "llvm", "weights", "search",
       "candidates", "training", "clustering", "evolution"},
      "top level");
  read(j, "backend", c.backend);
  if (c.backend != "sim" && c.backend != "llvm")
    throw GraceError("config: backend must be 'sim' or 'llvm'");
  read(j, "seed", c.seed);
  read(j, "jobs", c.jobs);

  if (j.contains("sim")) {
    const auto& s = j["sim"];
    config_detail::reject_unknown(s, {"train_per_family", "test_per_family"},
                                  "sim");
    read(s, "train_per_family", c.sim_train_per_family);
    read(s, "test_per_family", c.sim_test_per_family);
  }
  if (j.contains("llvm")) {
    const auto& l = j["llvm"];
    config_detail::reject_unknown(
        l, {"manifest", "test_manifest", "pass_list", "opt_bin", "timeout_s"},
        "llvm");
    read(l, "manifest", c.llvm_manifest);
    read(l, "test_manifest", c.llvm_test_manifest);
    read(l, "pass_list", c.llvm_pass_list);
    read(l, "opt_bin", c.llvm_opt_bin);
    read(l, "timeout_s", c.llvm_timeout_s);
  }
  if (j.contains("weights")) {
    const auto& w = j["weights"];
    config_detail::reject_unknown(w, {"avg", "std", "neg_rate"}, "weights");
    read(w, "avg", c.weights.w_avg);
    read(w, "std", c.weights.w_std);
    read(w, "neg_rate", c.weights.w_neg);
    if (c.weights.w_avg < 0 || c.weights.w_std < 0 || c.weights.w_neg < 0)
      throw GraceError("config: weights must be nonnegative");
  }
  if (j.contains("search")) {
    const auto& s = j["search"];
    config_detail::reject_unknown(
        s, {"budget", "beam_width", "random_pass_prob", "max_len"}, "search");
    read(s, "budget", c.search_budget);
    read(s, "beam_width", c.search.beam_width);
    read(s, "random_pass_prob", c.search.random_pass_prob);
    read(s, "max_len", c.search.max_len);
  }
  if (j.contains("candidates")) {
    const auto& s = j["candidates"];
    config_detail::reject_unknown(s, {"k_top", "histogram_bins"}, "candidates");
    read(s, "k_top", c.k_top);
    read(s, "histogram_bins", c.histogram_bins);
    if (c.k_top == 0) throw GraceError("config: k_top must be >= 1");
  }
  if (j.contains("training")) {
    const auto& t = j["training"];
    config_detail::reject_unknown(
        t,
        {"hidden_dim", "embed_dim", "proj_dim", "batch_anchors", "epochs",
         "learning_rate", "momentum", "tau"},
        "training");
    read(t, "hidden_dim", c.training.hidden_dim);
    read(t, "embed_dim", c.training.embed_dim);
    read(t, "proj_dim", c.training.proj_dim);
    read(t, "batch_anchors", c.training.batch_anchors);
    read(t, "epochs", c.training.epochs);
    read(t, "learning_rate", c.training.learning_rate);
    read(t, "momentum", c.training.momentum);
    read(t, "tau", c.training.tau);
    if (c.training.tau <= 0) throw GraceError("config: tau must be positive");
  }
  if (j.contains("clustering")) {
    const auto& s = j["clustering"];
    config_detail::reject_unknown(s, {"k", "restarts"}, "clustering");
    read(s, "k", c.k);
    read(s, "restarts", c.kmeans_restarts);
    if (c.k == 0) throw GraceError("config: k must be >= 1");
  }
  if (j.contains("evolution")) {
    const auto& e = j["evolution"];
    config_detail::reject_unknown(
        e,
        {"population_size", "generations", "seed_fraction", "crossover_rate",
         "mutation_rate", "elitism", "max_len"},
        "evolution");
    read(e, "population_size", c.ga.population_size);
    read(e, "generations", c.ga.generations);
    read(e, "seed_fraction", c.ga.seed_fraction);
    read(e, "crossover_rate", c.ga.crossover_rate);
    read(e, "mutation_rate", c.ga.mutation_rate);
    read(e, "elitism", c.ga.elitism);
    read(e, "max_len", c.ga.max_len);
    c.ga.validate();
  }
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GraceError("cannot open config: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw GraceError(std::string("config: parse error: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace grace
