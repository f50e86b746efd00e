#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "grace/backend.hpp"
#include "grace/common.hpp"
#include "grace/evolution.hpp"
#include "grace/scoring.hpp"

namespace grace {

struct RefinementOptions {
  bool prefix = false;
  bool local_ga = false;
  bool oz_fallback = false;
  GaConfig local_ga_cfg = [] {
    GaConfig c;
    c.population_size = 16;
    c.generations = 10;
    return c;
  }();
  std::uint64_t seed = 1;
};

struct TuneResult {
  std::string program_id;
  PassSequence selected_sequence;
  bool applied_prefix = false;
  bool applied_local_ga = false;
  bool applied_oz_fallback = false;
  std::int64_t final_count = 0;
  double over_oz_pct = 0.0;
  std::uint64_t evals_used = 0;
  double wall_time_s = 0.0;
};

struct SuiteReport {
  std::vector<TuneResult> results;
  double avg_over_oz = 0.0;
  double success_pct = 0.0;  // OverOz > 0
  double worse_pct = 0.0;    // OverOz < 0
  double equal_pct = 0.0;
};

// Best coreset sequence by instruction count; ties toward the shorter
// sequence, then the lower cluster index. Failed compiles are skipped; if
// every sequence fails, the empty sequence (baseline) is returned.
inline std::pair<PassSequence, std::int64_t> select_from_coreset(
    const Backend& backend, const ProgramHandle& p,
    const std::vector<CoresetEntry>& coreset, unsigned jobs = 1,
    std::uint64_t* evals = nullptr) {
  if (coreset.empty()) throw GraceError("select_from_coreset: empty coreset");
  std::vector<CountResult> counts(coreset.size());
  parallel_for(coreset.size(), jobs, [&](std::size_t i) {
    counts[i] = backend.instruction_count(p, coreset[i].sequence);
  });
  if (evals) *evals += coreset.size();
  PassSequence best;
  std::int64_t best_count = p.baseline_count;
  bool found = false;
  for (std::size_t i = 0; i < coreset.size(); ++i) {
    if (!counts[i].ok()) continue;
    bool better =
        !found || counts[i].count < best_count ||
        (counts[i].count == best_count &&
         coreset[i].sequence.size() < best.size());
    if (better) {
      best = coreset[i].sequence;
      best_count = counts[i].count;
      found = true;
    }
  }
  if (!found) return {PassSequence{}, p.baseline_count};
  return {best, best_count};
}

// Derivative (prefix) search: evaluates every strict prefix of the
// sequence; a prefix replaces the original only when strictly better.
inline PassSequence refine_prefix(const Backend& backend,
                                  const ProgramHandle& p,
                                  const PassSequence& seq,
                                  std::uint64_t* evals = nullptr) {
  if (seq.empty()) return seq;
  CountResult full = backend.instruction_count(p, seq);
  std::int64_t best_count =
      full.ok() ? full.count : std::numeric_limits<std::int64_t>::max();
  PassSequence best = seq;
  for (std::size_t len = 1; len < seq.size(); ++len) {
    PassSequence pre = seq.prefix(len);
    CountResult r = backend.instruction_count(p, pre);
    if (evals) ++*evals;
    if (r.ok() && r.count < best_count) {
      best_count = r.count;
      best = std::move(pre);
    }
  }
  return best;
}

// Localized GA over the sequence's own pass multiset: the pool is the
// unique passes of `seq`, seeded with `seq` itself plus random permutations.
// Returns the better of the GA result and the original.
inline PassSequence refine_local_ga(const Backend& backend,
                                    const ProgramHandle& p,
                                    const PassSequence& seq,
                                    const GaConfig& cfg,
                                    std::uint64_t rng_seed,
                                    std::uint64_t* evals = nullptr) {
  if (seq.empty()) return seq;
  std::set<PassId> unique(seq.passes.begin(), seq.passes.end());
  std::vector<PassId> alphabet(unique.begin(), unique.end());

  GaConfig lcfg = cfg;
  lcfg.rng_seed = rng_seed;
  Rng perm_rng(mix_seed(rng_seed, 0x5eed));
  std::vector<PassSequence> seeds{seq};
  std::size_t n_seeded = static_cast<std::size_t>(
      std::ceil(lcfg.population_size * lcfg.seed_fraction));
  while (seeds.size() < n_seeded) {
    PassSequence perm = seq;
    std::shuffle(perm.passes.begin(), perm.passes.end(), perm_rng);
    seeds.push_back(std::move(perm));
  }

  std::uint64_t ga_evals = 0;
  auto fitness = [&](const PassSequence& s) -> double {
    ++ga_evals;
    CountResult r = backend.instruction_count(p, s);
    if (!r.ok()) return -std::numeric_limits<double>::infinity();
    return -static_cast<double>(r.count);  // minimize count
  };
  auto [best, best_fit] = run_ga(seeds, alphabet, lcfg, fitness);
  if (evals) *evals += ga_evals;

  CountResult orig = backend.instruction_count(p, seq);
  CountResult refined = backend.instruction_count(p, best);
  if (orig.ok() && refined.ok() && refined.count < orig.count) return best;
  return seq;
}

// Oz safety net: keep `seq` only when strictly better than the Oz baseline;
// at equality Oz wins.
inline PassSequence refine_oz_fallback(const Backend& backend,
                                       const ProgramHandle& p,
                                       const PassSequence& seq) {
  CountResult r = backend.instruction_count(p, seq);
  std::int64_t oz = backend.oz_count(p);
  if (r.ok() && r.count < oz) return seq;
  return backend.oz_sequence();
}

// Full test-time pipeline: coreset selection, then the enabled refinements
// in the fixed order prefix -> local GA -> Oz fallback.
inline TuneResult tune(const Backend& backend, const ProgramHandle& p,
                       const std::vector<CoresetEntry>& coreset,
                       const RefinementOptions& options, unsigned jobs = 1) {
  auto t0 = std::chrono::steady_clock::now();
  TuneResult res;
  res.program_id = p.id;

  auto [seq, count] =
      select_from_coreset(backend, p, coreset, jobs, &res.evals_used);
  if (options.prefix && !seq.empty()) {
    seq = refine_prefix(backend, p, seq, &res.evals_used);
    res.applied_prefix = true;
  }
  if (options.local_ga && !seq.empty()) {
    seq = refine_local_ga(backend, p, seq, options.local_ga_cfg,
                          mix_seed(options.seed, std::hash<std::string>{}(p.id)),
                          &res.evals_used);
    res.applied_local_ga = true;
  }
  if (options.oz_fallback) {
    seq = refine_oz_fallback(backend, p, seq);
    res.applied_oz_fallback = true;
  }

  res.selected_sequence = seq;
  CountResult final = backend.instruction_count(p, seq);
  res.final_count = final.ok() ? final.count : p.baseline_count;
  res.over_oz_pct = over_oz(backend.oz_count(p), res.final_count);
  res.wall_time_s = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
  return res;
}

inline SuiteReport run_suite(const Backend& backend,
                             const std::vector<ProgramHandle>& test_corpus,
                             const std::vector<CoresetEntry>& coreset,
                             const RefinementOptions& options,
                             unsigned jobs = 1) {
  if (test_corpus.empty()) throw GraceError("run_suite: empty corpus");
  SuiteReport report;
  report.results.resize(test_corpus.size());
  parallel_for(test_corpus.size(), jobs, [&](std::size_t i) {
    report.results[i] = tune(backend, test_corpus[i], coreset, options, 1);
  });
  double sum = 0.0;
  std::size_t succ = 0, worse = 0;
  for (const auto& r : report.results) {
    sum += r.over_oz_pct;
    if (r.over_oz_pct > 0.0) ++succ;
    if (r.over_oz_pct < 0.0) ++worse;
  }
  double n = static_cast<double>(report.results.size());
  report.avg_over_oz = sum / n;
  report.success_pct = 100.0 * static_cast<double>(succ) / n;
  report.worse_pct = 100.0 * static_cast<double>(worse) / n;
  report.equal_pct = 100.0 - report.success_pct - report.worse_pct;
  return report;
}

}  // namespace grace
