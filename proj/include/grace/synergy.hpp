#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "grace/backend.hpp"
#include "grace/common.hpp"

namespace grace {

// Ordered pass pair: applying `first` immediately before `second` improved
// on `second` alone for some program. first == second is admitted (a pass
// that helps its own repetition).
using SynergyPair = std::pair<PassId, PassId>;

struct SynergyGraph {
  std::set<PassId> nodes;
  // (A, B) -> number of training programs exhibiting the pair.
  std::map<SynergyPair, std::size_t> edges;

  bool empty() const { return edges.empty(); }

  // Successors of `a`, with edge support counts.
  std::vector<std::pair<PassId, std::size_t>> successors(const PassId& a) const {
    std::vector<std::pair<PassId, std::size_t>> out;
    for (const auto& [e, support] : edges)
      if (e.first == a) out.emplace_back(e.second, support);
    return out;
  }
};

// Pairwise synergy scan for one program. Pair (A, B) is kept exactly when
// V_B < V (B alone reduces) and V_AB < V_B (A before B improves further),
// with <A, B> applied to the original program. Evaluation failures for a
// specific pair exclude that pair without aborting the scan.
inline std::set<SynergyPair> identify_synergy_pairs(
    const Backend& backend, const ProgramHandle& p,
    const std::vector<PassId>& universe) {
  if (universe.empty())
    throw GraceError("identify_synergy_pairs: empty universe");
  std::set<SynergyPair> pairs;
  const std::int64_t v_base = p.baseline_count;
  for (const PassId& b : universe) {
    CountResult rb = backend.instruction_count(p, PassSequence{{b}});
    if (!rb.ok() || rb.count >= v_base) continue;
    for (const PassId& a : universe) {
      CountResult rab = backend.instruction_count(p, PassSequence{{a, b}});
      if (rab.ok() && rab.count < rb.count) pairs.insert({a, b});
    }
  }
  return pairs;
}

// Multiset union of per-program pair sets; support = number of sets
// containing the edge.
inline SynergyGraph build_global_graph(
    const std::vector<std::set<SynergyPair>>& per_program_pairs) {
  SynergyGraph g;
  for (const auto& pairs : per_program_pairs) {
    for (const auto& pr : pairs) {
      g.nodes.insert(pr.first);
      g.nodes.insert(pr.second);
      ++g.edges[pr];
    }
  }
  return g;
}

struct SearchConfig {
  std::size_t beam_width = 8;
  double random_pass_prob = 0.2;  // escape hatch out of graph locality
  std::size_t max_len = 60;
  std::size_t proposals_per_beam = 3;
};

// Beam search guided by the synergy graph: beams extend their sequence by a
// successor of the last pass (sampled by edge support), or a uniformly
// random universe pass with probability `random_pass_prob`. The empty
// sequence is always an implicit candidate, so the result never exceeds the
// baseline count. Falls back to a single-pass scan on an empty graph.
// Returns the best sequence found within `budget` evaluations.
inline PassSequence search_high_performing_sequence(
    const Backend& backend, const ProgramHandle& p, const SynergyGraph& g,
    std::size_t budget, std::uint64_t seed, const SearchConfig& cfg = {}) {
  if (budget == 0) throw GraceError("search: budget must be >= 1");
  const auto& universe = backend.pass_universe();
  Rng rng(seed);

  PassSequence best;
  std::int64_t best_count = p.baseline_count;
  std::size_t evals = 0;

  auto try_candidate = [&](const PassSequence& seq) -> std::int64_t {
    ++evals;
    CountResult r = backend.instruction_count(p, seq);
    if (r.ok() && r.count < best_count) {
      best = seq;
      best_count = r.count;
    }
    return r.ok() ? r.count : std::numeric_limits<std::int64_t>::max();
  };

  if (g.empty()) {
    for (const PassId& id : universe) {
      if (evals >= budget) break;
      try_candidate(PassSequence{{id}});
    }
    return best;
  }

  // Cumulative-support sampling over graph nodes (by outgoing support) for
  // the first step, and over successors afterwards.
  std::vector<std::pair<PassId, std::size_t>> roots;
  {
    std::map<PassId, std::size_t> out_support;
    for (const auto& [e, s] : g.edges) out_support[e.first] += s;
    roots.assign(out_support.begin(), out_support.end());
  }
  auto sample_weighted =
      [&rng](const std::vector<std::pair<PassId, std::size_t>>& items)
      -> const PassId& {
    std::size_t total = 0;
    for (const auto& [id, w] : items) total += w;
    std::uniform_int_distribution<std::size_t> dist(0, total - 1);
    std::size_t pick = dist(rng);
    for (const auto& [id, w] : items) {
      if (pick < w) return id;
      pick -= w;
    }
    return items.back().first;
  };
  auto sample_next = [&](const PassSequence& seq) -> PassId {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < cfg.random_pass_prob) {
      std::uniform_int_distribution<std::size_t> dist(0, universe.size() - 1);
      return universe[dist(rng)];
    }
    if (seq.empty()) return sample_weighted(roots);
    auto succ = g.successors(seq.passes.back());
    if (succ.empty()) return sample_weighted(roots);
    return sample_weighted(succ);
  };

  struct Beam {
    PassSequence seq;
    std::int64_t count;
  };
  std::vector<Beam> beams{{PassSequence{}, p.baseline_count}};

  for (std::size_t depth = 0; depth < cfg.max_len && evals < budget; ++depth) {
    std::vector<Beam> next = beams;
    for (const Beam& b : beams) {
      for (std::size_t j = 0;
           j < cfg.proposals_per_beam && evals < budget; ++j) {
        PassSequence ext = b.seq;
        ext.passes.push_back(sample_next(b.seq));
        std::int64_t c = try_candidate(ext);
        if (c != std::numeric_limits<std::int64_t>::max())
          next.push_back({std::move(ext), c});
      }
    }
    std::stable_sort(next.begin(), next.end(),
                     [](const Beam& a, const Beam& b) {
                       if (a.count != b.count) return a.count < b.count;
                       return a.seq.size() < b.seq.size();
                     });
    if (next.size() > cfg.beam_width) next.resize(cfg.beam_width);
    beams = std::move(next);
  }
  return best;
}

}  // namespace grace
