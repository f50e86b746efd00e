#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "grace/backend.hpp"
#include "grace/common.hpp"
#include "grace/scoring.hpp"

namespace grace {

struct RankedSequence {
  PassSequence sequence;
  DistributionStats stats;
  double score = 0.0;
};

struct PassPool {
  std::set<PassId> passes;

  bool contains(const PassId& id) const { return passes.count(id) > 0; }
  std::vector<PassId> ordered() const {
    return std::vector<PassId>(passes.begin(), passes.end());
  }
};

// Evaluates every sequence on the whole training corpus and ranks by
// weighted score, descending. Ties break toward the shorter sequence, then
// lexicographic pass names, so orderings are reproducible.
inline std::vector<RankedSequence> evaluate_sequences(
    const Backend& backend, const std::vector<PassSequence>& seqs,
    const std::vector<ProgramHandle>& corpus, const ScoreWeights& weights = {},
    unsigned jobs = 1) {
  if (corpus.empty()) throw GraceError("evaluate_sequences: empty corpus");
  std::vector<RankedSequence> ranked(seqs.size());
  // One flat task per (sequence, program) pair.
  std::vector<std::vector<double>> over_oz_matrix(
      seqs.size(), std::vector<double>(corpus.size()));
  parallel_for(seqs.size() * corpus.size(), jobs, [&](std::size_t t) {
    std::size_t si = t / corpus.size();
    std::size_t pi = t % corpus.size();
    EvalOutcome o = backend.evaluate(corpus[pi], seqs[si]);
    over_oz_matrix[si][pi] = outcome_over_oz(o);
  });
  for (std::size_t si = 0; si < seqs.size(); ++si) {
    ranked[si].sequence = seqs[si];
    ranked[si].stats = distribution_stats(over_oz_matrix[si]);
    ranked[si].score = weighted_score(ranked[si].stats, weights);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedSequence& a, const RankedSequence& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.sequence.size() != b.sequence.size())
                       return a.sequence.size() < b.sequence.size();
                     return a.sequence.passes < b.sequence.passes;
                   });
  return ranked;
}

// Top-k candidate set C_seq plus the pass pool P_pool (union of the passes
// appearing in the selected sequences).
inline std::pair<std::vector<PassSequence>, PassPool> select_candidates(
    const std::vector<RankedSequence>& ranked, std::size_t k_top) {
  if (ranked.empty()) throw GraceError("select_candidates: no ranked sequences");
  if (k_top == 0) throw GraceError("select_candidates: k_top must be >= 1");
  std::size_t n = std::min(k_top, ranked.size());
  std::vector<PassSequence> c_seq;
  PassPool pool;
  for (std::size_t i = 0; i < n; ++i) {
    c_seq.push_back(ranked[i].sequence);
    for (const PassId& id : ranked[i].sequence.passes) pool.passes.insert(id);
  }
  return {std::move(c_seq), std::move(pool)};
}

struct Histogram {
  std::vector<double> edges;        // bins + 1 entries
  std::vector<std::size_t> counts;  // bins entries
};

// Equal-width bins spanning [min score, max score]; the last bin is
// closed on the right. A zero-width range puts everything in bin 0.
inline Histogram score_histogram(const std::vector<RankedSequence>& ranked,
                                 std::size_t bins) {
  if (ranked.empty()) throw GraceError("score_histogram: no sequences");
  if (bins == 0) throw GraceError("score_histogram: bins must be >= 1");
  double lo = ranked.front().score, hi = ranked.front().score;
  for (const auto& r : ranked) {
    lo = std::min(lo, r.score);
    hi = std::max(hi, r.score);
  }
  Histogram h;
  h.counts.assign(bins, 0);
  double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i)
    h.edges.push_back(lo + width * static_cast<double>(i));
  for (const auto& r : ranked) {
    std::size_t idx = 0;
    if (width > 0.0)
      idx = std::min(bins - 1,
                     static_cast<std::size_t>((r.score - lo) / width));
    ++h.counts[idx];
  }
  return h;
}

}  // namespace grace
