#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "grace/candidates.hpp"
#include "grace/clustering.hpp"
#include "grace/config.hpp"
#include "grace/deployment.hpp"
#include "grace/embedding.hpp"
#include "grace/evolution.hpp"
#include "grace/knowledge_base.hpp"
#include "grace/llvm_backend.hpp"
#include "grace/sim_backend.hpp"
#include "grace/synergy.hpp"

namespace grace {

// Owns the backend and the corpora derived from the configuration. The
// simulated corpora regenerate deterministically from the config seed, so
// stages run in separate processes see identical programs.
struct PipelineContext {
  std::unique_ptr<Backend> backend;
  std::vector<ProgramHandle> train_corpus;
  std::vector<ProgramHandle> test_corpus;
};

inline PipelineContext make_context(const PipelineConfig& cfg) {
  PipelineContext ctx;
  if (cfg.backend == "sim") {
    auto sim = std::make_unique<SimBackend>();
    ctx.train_corpus = sim->generate_corpus(cfg.sim_train_per_family,
                                            mix_seed(cfg.seed, 0xc0),
                                            "train_f");
    ctx.test_corpus = sim->generate_corpus(cfg.sim_test_per_family,
                                           mix_seed(cfg.seed, 0xc1),
                                           "test_f");
    ctx.backend = std::move(sim);
  } else {
    if (cfg.llvm_pass_list.empty())
      throw GraceError("llvm backend requires llvm.pass_list");
    auto llvm = std::make_unique<LlvmBackend>(
        LlvmBackend::read_pass_list(cfg.llvm_pass_list), cfg.llvm_opt_bin,
        cfg.llvm_timeout_s);
    if (!cfg.llvm_manifest.empty())
      ctx.train_corpus = llvm->load_manifest(cfg.llvm_manifest);
    if (!cfg.llvm_test_manifest.empty())
      ctx.test_corpus = llvm->load_manifest(cfg.llvm_test_manifest);
    ctx.backend = std::move(llvm);
  }
  return ctx;
}

enum class Stage { synergy, candidates, embed, cluster, evolve };

inline Stage parse_stage(const std::string& s) {
  if (s == "synergy") return Stage::synergy;
  if (s == "candidates") return Stage::candidates;
  if (s == "embed") return Stage::embed;
  if (s == "cluster") return Stage::cluster;
  if (s == "evolve") return Stage::evolve;
  throw GraceError("unknown stage: " + s);
}

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::synergy: return "synergy";
    case Stage::candidates: return "candidates";
    case Stage::embed: return "embed";
    case Stage::cluster: return "cluster";
    case Stage::evolve: return "evolve";
  }
  return "?";
}

namespace pipeline_detail {

inline void require(bool present, const char* artifact) {
  if (!present)
    throw GraceError(std::string("missing prerequisite artifact: ") + artifact);
}

inline std::vector<LabeledPoint> embed_corpus(
    const Backend& backend, const EncoderParams& params,
    const std::vector<ProgramHandle>& corpus) {
  std::vector<LabeledPoint> pts;
  for (const auto& p : corpus)
    pts.push_back({p.id, embed(params, backend.extract_features(p))});
  return pts;
}

}  // namespace pipeline_detail

// Runs one stage against the kb held in memory.
inline void run_stage_in_memory(Stage stage, const PipelineConfig& cfg,
                                const PipelineContext& ctx, KnowledgeBase& kb) {
  const Backend& backend = *ctx.backend;
  if (ctx.train_corpus.empty())
    throw GraceError("pipeline: empty training corpus");
  kb.backend_name = backend.name();
  kb.feature_dim = backend.feature_dim();
  kb.universe = backend.pass_universe();
  kb.oz_seq = backend.oz_sequence();

  switch (stage) {
    case Stage::synergy: {
      std::vector<std::set<SynergyPair>> per_program(ctx.train_corpus.size());
      parallel_for(ctx.train_corpus.size(), cfg.jobs, [&](std::size_t i) {
        per_program[i] = identify_synergy_pairs(backend, ctx.train_corpus[i],
                                                backend.pass_universe());
      });
      kb.synergy = build_global_graph(per_program);
      break;
    }
    case Stage::candidates: {
      pipeline_detail::require(kb.synergy.has_value(), "synergy graph");
      std::vector<PassSequence> found(ctx.train_corpus.size());
      parallel_for(ctx.train_corpus.size(), cfg.jobs, [&](std::size_t i) {
        found[i] = search_high_performing_sequence(
            backend, ctx.train_corpus[i], *kb.synergy, cfg.search_budget,
            mix_seed(cfg.seed, 0x5ea0 + i), cfg.search);
      });
      // Unique nonempty sequences form Seq_HP.
      std::set<std::string> seen;
      std::vector<PassSequence> seq_hp;
      for (auto& s : found) {
        if (s.empty()) continue;
        if (seen.insert(s.key()).second) seq_hp.push_back(std::move(s));
      }
      if (seq_hp.empty())
        throw GraceError("candidates: search produced no improving sequences");
      auto ranked = evaluate_sequences(backend, seq_hp, ctx.train_corpus,
                                       cfg.weights, cfg.jobs);
      auto [c_seq, pool] = select_candidates(ranked, cfg.k_top);
      kb.ranked = std::move(ranked);
      kb.c_seq = std::move(c_seq);
      kb.p_pool = std::move(pool);
      break;
    }
    case Stage::embed: {
      TrainConfig tc = cfg.training;
      tc.seed = mix_seed(cfg.seed, 0xe0bed);
      std::vector<double> losses;
      kb.encoder = train_encoder(backend, ctx.train_corpus, tc, &losses);
      kb.epoch_losses = std::move(losses);
      break;
    }
    case Stage::cluster: {
      pipeline_detail::require(kb.encoder.has_value(), "encoder params");
      auto pts =
          pipeline_detail::embed_corpus(backend, *kb.encoder, ctx.train_corpus);
      // One coreset sequence per cluster; clusters need enough members for
      // meaningful GA fitness, so clamp k on small corpora.
      std::size_t k =
          std::min(cfg.k, std::max<std::size_t>(1, pts.size() / 5));
      kb.clustering = kmeans_fit_restarts(pts, k, mix_seed(cfg.seed, 0xc1a5),
                                          cfg.kmeans_restarts, 100, cfg.jobs);
      break;
    }
    case Stage::evolve: {
      pipeline_detail::require(kb.clustering.has_value(), "clustering");
      pipeline_detail::require(kb.c_seq.has_value(), "candidate set C_seq");
      GaConfig ga = cfg.ga;
      ga.rng_seed = mix_seed(cfg.seed, 0xe70e);
      kb.coreset = evolve_all(backend, *kb.clustering, ctx.train_corpus,
                              *kb.c_seq, *kb.p_pool, ga, cfg.weights,
                              cfg.jobs);
      break;
    }
  }
  kb.provenance.emplace_back(stage_name(stage), cfg.seed);
}

// Stage runner against a kb file; the output is written atomically.
inline KnowledgeBase run_stage(Stage stage, const PipelineConfig& cfg,
                               const PipelineContext& ctx,
                               const std::filesystem::path& kb_path) {
  KnowledgeBase kb;
  if (std::filesystem::exists(kb_path)) kb = load_kb(kb_path);
  run_stage_in_memory(stage, cfg, ctx, kb);
  save_kb(kb, kb_path);
  return kb;
}

inline KnowledgeBase run_all(const PipelineConfig& cfg,
                             const PipelineContext& ctx,
                             const std::filesystem::path& kb_path) {
  KnowledgeBase kb;
  for (Stage s : {Stage::synergy, Stage::candidates, Stage::embed,
                  Stage::cluster, Stage::evolve}) {
    try {
      run_stage_in_memory(s, cfg, ctx, kb);
    } catch (const GraceError& e) {
      throw GraceError(std::string("stage ") + stage_name(s) +
                       " failed: " + e.what());
    }
    save_kb(kb, kb_path);
  }
  return kb;
}

// --- Reports ---------------------------------------------------------------

namespace report_detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

}  // namespace report_detail

inline std::string scores_csv(const KnowledgeBase& kb) {
  pipeline_detail::require(kb.ranked.has_value(), "ranked candidates");
  std::string out = "rank,score,avg,std,neg_rate,length,sequence\n";
  std::size_t rank = 1;
  for (const auto& r : *kb.ranked) {
    out += std::to_string(rank++) + "," + report_detail::fmt(r.score) + "," +
           report_detail::fmt(r.stats.avg) + "," +
           report_detail::fmt(r.stats.std_dev) + "," +
           report_detail::fmt(r.stats.neg_rate) + "," +
           std::to_string(r.sequence.size()) + "," + r.sequence.key() + "\n";
  }
  return out;
}

inline std::string histogram_csv(const KnowledgeBase& kb, std::size_t bins) {
  pipeline_detail::require(kb.ranked.has_value(), "ranked candidates");
  Histogram h = score_histogram(*kb.ranked, bins);
  std::string out = "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    out += report_detail::fmt(h.edges[i]) + "," +
           report_detail::fmt(h.edges[i + 1]) + "," +
           std::to_string(h.counts[i]) + "\n";
  return out;
}

inline std::string coreset_metrics_csv(const KnowledgeBase& kb) {
  pipeline_detail::require(kb.coreset.has_value(), "coreset");
  std::string out = "cluster,avg,std,neg_rate,fitness,length,sequence\n";
  for (const auto& e : *kb.coreset)
    out += std::to_string(e.cluster_index) + "," +
           report_detail::fmt(e.stats.avg) + "," +
           report_detail::fmt(e.stats.std_dev) + "," +
           report_detail::fmt(e.stats.neg_rate) + "," +
           report_detail::fmt(e.fitness) + "," +
           std::to_string(e.sequence.size()) + "," + e.sequence.key() + "\n";
  return out;
}

inline std::string sweep_csv(const KnowledgeBase& kb,
                             const PipelineConfig& cfg,
                             const PipelineContext& ctx) {
  pipeline_detail::require(kb.encoder.has_value(), "encoder params");
  auto pts = pipeline_detail::embed_corpus(*ctx.backend, *kb.encoder,
                                           ctx.train_corpus);
  std::size_t hi = std::min<std::size_t>(15, pts.size());
  auto rows = sweep_k(pts, 2, hi, mix_seed(cfg.seed, 0x53ee),
                      cfg.kmeans_restarts, cfg.jobs);
  std::string out = "k,silhouette,davies_bouldin\n";
  for (const auto& r : rows)
    out += std::to_string(r.k) + "," + report_detail::fmt(r.silhouette) + "," +
           report_detail::fmt(r.dbi) + "\n";
  return out;
}

inline std::string embeddings_csv(const KnowledgeBase& kb,
                                  const PipelineContext& ctx) {
  pipeline_detail::require(kb.encoder.has_value(), "encoder params");
  auto pts = pipeline_detail::embed_corpus(*ctx.backend, *kb.encoder,
                                           ctx.train_corpus);
  std::string out = "id";
  for (std::size_t d = 0; d < kb.encoder->embed_dim(); ++d)
    out += ",e" + std::to_string(d);
  out += "\n";
  for (const auto& p : pts) {
    out += p.id;
    for (double v : p.vec) out += "," + report_detail::fmt(v);
    out += "\n";
  }
  return out;
}

inline Json suite_report_json(const SuiteReport& report) {
  Json j;
  j["avg_over_oz"] = report.avg_over_oz;
  j["success_pct"] = report.success_pct;
  j["worse_pct"] = report.worse_pct;
  j["equal_pct"] = report.equal_pct;
  Json results = Json::array();
  for (const auto& r : report.results) {
    results.push_back(Json{{"program_id", r.program_id},
                           {"sequence", r.selected_sequence.passes},
                           {"refinement",
                            Json{{"prefix", r.applied_prefix},
                                 {"local_ga", r.applied_local_ga},
                                 {"oz_fallback", r.applied_oz_fallback}}},
                           {"final_count", r.final_count},
                           {"over_oz_pct", r.over_oz_pct},
                           {"evals_used", r.evals_used},
                           {"wall_time_s", r.wall_time_s}});
  }
  j["results"] = results;
  return j;
}

inline std::string suite_over_oz_csv(const SuiteReport& report) {
  std::string out = "program_id,over_oz_pct\n";
  for (const auto& r : report.results)
    out += r.program_id + "," + report_detail::fmt(r.over_oz_pct) + "\n";
  return out;
}

}  // namespace grace
