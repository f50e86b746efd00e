// grace: compiler pass auto-tuning pipeline CLI.
//
// Stages: synergy -> candidates -> embed -> cluster -> evolve, persisted in
// a single JSON knowledge base; `tune` applies the evolved coreset to a
// test corpus and `report` exports stage artifacts as CSV/JSON.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "grace/config.hpp"
#include "grace/knowledge_base.hpp"
#include "grace/pipeline.hpp"

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string kb_path = "kb.json";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::optional<std::string> backend;
};

grace::PipelineConfig resolve_config(const GlobalOpts& g) {
  grace::PipelineConfig cfg;
  if (!g.config_path.empty()) cfg = grace::load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (g.jobs) cfg.jobs = *g.jobs;
  if (g.backend) {
    if (*g.backend != "sim" && *g.backend != "llvm")
      throw grace::GraceError("--backend must be sim or llvm");
    cfg.backend = *g.backend;
  }
  return cfg;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw grace::GraceError("cannot write: " + path);
  out << content;
}

grace::RefinementOptions parse_refinements(const std::string& spec,
                                           std::uint64_t seed) {
  grace::RefinementOptions opts;
  opts.seed = seed;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    if (tok == "prefix") opts.prefix = true;
    else if (tok == "localga") opts.local_ga = true;
    else if (tok == "ozfallback") opts.oz_fallback = true;
    else throw grace::GraceError("unknown refinement: " + tok +
                                 " (expected prefix|localga|ozfallback)");
  }
  return opts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grace - compiler pass auto-tuning"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "Pipeline config (JSON)");
  app.add_option("--kb", g.kb_path, "Knowledge base file")
      ->capture_default_str();
  std::uint64_t seed_val = 0;
  unsigned jobs_val = 0;
  std::string backend_val;
  auto* seed_opt = app.add_option("--seed", seed_val, "Master RNG seed");
  auto* jobs_opt = app.add_option("--jobs", jobs_val, "Worker threads");
  auto* backend_opt =
      app.add_option("--backend", backend_val, "Backend: sim|llvm");

  for (const char* stage : {"synergy", "candidates", "embed", "cluster",
                            "evolve"})
    app.add_subcommand(stage, std::string("Run the ") + stage + " stage");
  app.add_subcommand("all", "Run all pipeline stages in order");

  auto* tune_cmd = app.add_subcommand("tune", "Apply the coreset to a corpus");
  std::string refine_spec, tune_out = "report.json", tune_manifest;
  tune_cmd->add_option("--refine", refine_spec,
                       "Comma list of prefix,localga,ozfallback");
  tune_cmd->add_option("--out", tune_out, "Report output path")
      ->capture_default_str();
  tune_cmd->add_option("--manifest", tune_manifest,
                       "Test corpus manifest (llvm backend)");

  auto* report_cmd = app.add_subcommand("report", "Export stage artifacts");
  std::string what = "scores", report_out;
  report_cmd
      ->add_option("--what", what,
                   "scores|histogram|coreset_metrics|sweep|embeddings|suite")
      ->capture_default_str();
  report_cmd->add_option("--out", report_out, "Output path (default stdout)");
  std::size_t bins = 20;
  report_cmd->add_option("--bins", bins, "Histogram bins")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  grace::PipelineConfig cfg;
  try {
    if (*seed_opt) g.seed = seed_val;
    if (*jobs_opt) g.jobs = jobs_val;
    if (*backend_opt) g.backend = backend_val;
    cfg = resolve_config(g);
  } catch (const grace::GraceError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    grace::PipelineContext ctx = grace::make_context(cfg);

    if (app.got_subcommand("all")) {
      grace::run_all(cfg, ctx, g.kb_path);
      std::cout << "knowledge base written to " << g.kb_path << "\n";
      return 0;
    }
    for (const char* stage : {"synergy", "candidates", "embed", "cluster",
                              "evolve"}) {
      if (app.got_subcommand(stage)) {
        grace::run_stage(grace::parse_stage(stage), cfg, ctx, g.kb_path);
        std::cout << "stage " << stage << " complete; kb at " << g.kb_path
                  << "\n";
        return 0;
      }
    }

    if (app.got_subcommand(tune_cmd)) {
      grace::KnowledgeBase kb = grace::load_kb(g.kb_path);
      if (!kb.coreset)
        throw grace::GraceError("kb has no coreset; run evolve first");
      std::vector<grace::ProgramHandle> corpus = ctx.test_corpus;
      if (!tune_manifest.empty()) {
        auto* llvm = dynamic_cast<grace::LlvmBackend*>(ctx.backend.get());
        if (!llvm)
          throw grace::GraceError("--manifest requires the llvm backend");
        corpus = llvm->load_manifest(tune_manifest);
      }
      if (corpus.empty()) throw grace::GraceError("tune: empty test corpus");
      auto opts = parse_refinements(refine_spec, cfg.seed);
      grace::SuiteReport report = grace::run_suite(*ctx.backend, corpus,
                                                   *kb.coreset, opts, cfg.jobs);
      write_file(tune_out, grace::suite_report_json(report).dump(2) + "\n");
      write_file(tune_out + ".csv", grace::suite_over_oz_csv(report));
      std::cout << "avg OverOz " << report.avg_over_oz << "%, success "
                << report.success_pct << "%, worse " << report.worse_pct
                << "% -> " << tune_out << "\n";
      return 0;
    }

    if (app.got_subcommand(report_cmd)) {
      grace::KnowledgeBase kb = grace::load_kb(g.kb_path);
      std::string content;
      if (what == "scores") {
        content = grace::scores_csv(kb);
      } else if (what == "histogram") {
        content = grace::histogram_csv(kb, bins);
      } else if (what == "coreset_metrics") {
        content = grace::coreset_metrics_csv(kb);
      } else if (what == "sweep") {
        content = grace::sweep_csv(kb, cfg, ctx);
      } else if (what == "embeddings") {
        content = grace::embeddings_csv(kb, ctx);
      } else if (what == "suite") {
        if (!kb.coreset)
          throw grace::GraceError("kb has no coreset; run evolve first");
        auto report = grace::run_suite(*ctx.backend, ctx.test_corpus,
                                       *kb.coreset, {}, cfg.jobs);
        content = grace::suite_report_json(report).dump(2) + "\n";
      } else {
        throw grace::GraceError("unknown report: " + what);
      }
      if (report_out.empty())
        std::cout << content;
      else
        write_file(report_out, content);
      return 0;
    }
  } catch (const grace::GraceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
