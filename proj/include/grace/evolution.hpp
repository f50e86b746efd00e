#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "grace/backend.hpp"
#include "grace/candidates.hpp"
#include "grace/clustering.hpp"
#include "grace/common.hpp"
#include "grace/scoring.hpp"

namespace grace {

struct GaConfig {
  std::size_t population_size = 25;
  std::size_t generations = 50;
  double seed_fraction = 0.5;   // share of the initial population from C_seq
  double crossover_rate = 0.9;
  double mutation_rate = 0.2;   // per individual
  std::size_t elitism = 2;
  std::size_t tournament = 3;
  std::size_t max_len = 60;
  std::size_t random_init_max_len = 20;
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (population_size < 4) throw GraceError("ga: population_size must be >= 4");
    if (crossover_rate < 0 || crossover_rate > 1 || mutation_rate < 0 ||
        mutation_rate > 1 || seed_fraction < 0 || seed_fraction > 1)
      throw GraceError("ga: rates must lie in [0, 1]");
    if (elitism >= population_size)
      throw GraceError("ga: elitism must be < population_size");
  }
};

struct CoresetEntry {
  std::size_t cluster_index = 0;
  PassSequence sequence;
  DistributionStats stats;  // over exactly the cluster's member programs
  double fitness = 0.0;     // weighted score of `stats`
};

namespace detail {

inline PassSequence random_sequence(const std::vector<PassId>& alphabet,
                                    std::size_t max_len, Rng& rng) {
  std::uniform_int_distribution<std::size_t> len_dist(1, max_len);
  std::uniform_int_distribution<std::size_t> pass_dist(0, alphabet.size() - 1);
  PassSequence s;
  std::size_t len = len_dist(rng);
  for (std::size_t i = 0; i < len; ++i)
    s.passes.push_back(alphabet[pass_dist(rng)]);
  return s;
}

inline void mutate(PassSequence& s, const std::vector<PassId>& alphabet,
                   std::size_t max_len, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pass_dist(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> kind_dist(0, 2);
  int kind = kind_dist(rng);
  auto pos_in = [&](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n)(rng);
  };
  if (kind == 0 && !s.empty()) {  // replace
    s.passes[pos_in(s.size() - 1)] = alphabet[pass_dist(rng)];
  } else if (kind == 1 && s.size() < max_len) {  // insert
    s.passes.insert(s.passes.begin() + pos_in(s.size()),
                    alphabet[pass_dist(rng)]);
  } else if (s.size() > 1) {  // delete, keeping length >= 1
    s.passes.erase(s.passes.begin() + pos_in(s.size() - 1));
  }
}

inline PassSequence crossover(const PassSequence& a, const PassSequence& b,
                              std::size_t max_len, Rng& rng) {
  // One-point crossover: head of a, tail of b.
  std::uniform_int_distribution<std::size_t> cut_a(0, a.size());
  std::uniform_int_distribution<std::size_t> cut_b(0, b.size());
  std::size_t ca = cut_a(rng), cb = cut_b(rng);
  PassSequence child;
  child.passes.assign(a.passes.begin(), a.passes.begin() + ca);
  child.passes.insert(child.passes.end(), b.passes.begin() + cb,
                      b.passes.end());
  if (child.passes.empty() && !a.empty()) child.passes.push_back(a.passes[0]);
  if (child.size() > max_len) child.passes.resize(max_len);
  return child;
}

}  // namespace detail

// Generic GA over pass sequences maximizing `fitness`. Seeded individuals
// are sampled without replacement from `seeds` (cycled when there are fewer
// seeds than slots); mutation and random initialization draw only from
// `alphabet`. Elitism keeps the best individuals, so best fitness is
// non-decreasing across generations.
struct GaTrace {
  std::vector<double> best_by_generation;  // index 0 = initial population
};

template <typename FitnessFn>
inline std::pair<PassSequence, double> run_ga(
    const std::vector<PassSequence>& seeds, const std::vector<PassId>& alphabet,
    const GaConfig& cfg, FitnessFn&& fitness, GaTrace* trace = nullptr) {
  cfg.validate();
  if (alphabet.empty()) throw GraceError("ga: empty alphabet");
  Rng rng(cfg.rng_seed);

  struct Ind {
    PassSequence seq;
    double fit;
  };
  std::vector<Ind> pop;

  const std::size_t n_seeded =
      seeds.empty() ? 0
                    : std::min(cfg.population_size,
                               static_cast<std::size_t>(std::ceil(
                                   cfg.population_size * cfg.seed_fraction)));
  std::vector<std::size_t> seed_order(seeds.size());
  std::iota(seed_order.begin(), seed_order.end(), 0);
  std::shuffle(seed_order.begin(), seed_order.end(), rng);
  for (std::size_t i = 0; i < n_seeded; ++i)
    pop.push_back({seeds[seed_order[i % seeds.size()]], 0.0});
  const std::size_t init_len = std::min(cfg.random_init_max_len, cfg.max_len);
  while (pop.size() < cfg.population_size)
    pop.push_back({detail::random_sequence(alphabet, init_len, rng), 0.0});
  for (auto& ind : pop) ind.fit = fitness(ind.seq);

  auto by_fitness = [](const Ind& a, const Ind& b) { return a.fit > b.fit; };
  std::stable_sort(pop.begin(), pop.end(), by_fitness);
  PassSequence best = pop.front().seq;
  double best_fit = pop.front().fit;
  if (trace) trace->best_by_generation.push_back(best_fit);

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  auto tournament = [&]() -> const Ind& {
    std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
    const Ind* winner = &pop[pick(rng)];
    for (std::size_t t = 1; t < cfg.tournament; ++t) {
      const Ind* c = &pop[pick(rng)];
      if (c->fit > winner->fit) winner = c;
    }
    return *winner;
  };

  for (std::size_t gen = 0; gen < cfg.generations; ++gen) {
    std::vector<Ind> next(pop.begin(), pop.begin() + cfg.elitism);
    while (next.size() < cfg.population_size) {
      PassSequence child;
      if (coin(rng) < cfg.crossover_rate) {
        child = detail::crossover(tournament().seq, tournament().seq,
                                  cfg.max_len, rng);
      } else {
        child = tournament().seq;
      }
      if (coin(rng) < cfg.mutation_rate)
        detail::mutate(child, alphabet, cfg.max_len, rng);
      double fit = fitness(child);
      next.push_back({std::move(child), fit});
    }
    pop = std::move(next);
    std::stable_sort(pop.begin(), pop.end(), by_fitness);
    if (pop.front().fit > best_fit) {
      best_fit = pop.front().fit;
      best = pop.front().seq;
    }
    if (trace) trace->best_by_generation.push_back(best_fit);
  }
  return {best, best_fit};
}

// Cluster-specific GA: fitness is the weighted score of the sequence over
// the cluster's member programs, with the (sequence, program) eval matrix
// memoized by the backend.
inline CoresetEntry evolve_cluster(const Backend& backend,
                                   const std::vector<ProgramHandle>& members,
                                   const std::vector<PassSequence>& c_seq,
                                   const PassPool& pool, const GaConfig& cfg,
                                   const ScoreWeights& weights = {},
                                   unsigned jobs = 1) {
  if (members.empty()) throw GraceError("evolve_cluster: empty cluster");
  if (pool.passes.empty()) throw GraceError("evolve_cluster: empty pass pool");
  std::vector<PassId> alphabet = pool.ordered();

  auto stats_of = [&](const PassSequence& seq) {
    std::vector<double> vals(members.size());
    parallel_for(members.size(), jobs, [&](std::size_t i) {
      vals[i] = outcome_over_oz(backend.evaluate(members[i], seq));
    });
    return distribution_stats(vals);
  };
  auto fitness = [&](const PassSequence& seq) {
    return weighted_score(stats_of(seq), weights);
  };

  auto [best, best_fit] = run_ga(c_seq, alphabet, cfg, fitness);

  CoresetEntry entry;
  entry.sequence = best;
  entry.stats = stats_of(best);
  entry.fitness = weighted_score(entry.stats, weights);
  return entry;
}

// One GA per cluster; per-cluster RNG streams derive from the master seed
// plus the cluster index, so results are order-independent. Clusters evolve
// in parallel.
inline std::vector<CoresetEntry> evolve_all(
    const Backend& backend, const Clustering& clustering,
    const std::vector<ProgramHandle>& corpus,
    const std::vector<PassSequence>& c_seq, const PassPool& pool,
    const GaConfig& cfg, const ScoreWeights& weights = {}, unsigned jobs = 1) {
  std::vector<std::vector<ProgramHandle>> members(clustering.k);
  for (const auto& p : corpus) {
    auto it = clustering.assignment.find(p.id);
    if (it == clustering.assignment.end())
      throw GraceError("evolve_all: program not in clustering: " + p.id);
    members[it->second].push_back(p);
  }
  std::vector<CoresetEntry> entries(clustering.k);
  parallel_for(clustering.k, jobs, [&](std::size_t j) {
    GaConfig ccfg = cfg;
    ccfg.rng_seed = mix_seed(cfg.rng_seed, j);
    entries[j] = evolve_cluster(backend, members[j], c_seq, pool, ccfg,
                                weights, 1);
    entries[j].cluster_index = j;
  });
  return entries;
}

struct CoresetMetrics {
  std::vector<double> avg;
  std::vector<double> std_dev;
  std::vector<double> neg_rate;
};

inline CoresetMetrics coreset_metrics(const std::vector<CoresetEntry>& entries) {
  if (entries.empty()) throw GraceError("coreset_metrics: no entries");
  CoresetMetrics m;
  for (const auto& e : entries) {
    m.avg.push_back(e.stats.avg);
    m.std_dev.push_back(e.stats.std_dev);
    m.neg_rate.push_back(e.stats.neg_rate);
  }
  return m;
}

}  // namespace grace
