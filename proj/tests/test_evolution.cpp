#include "doctest.h"

#include <cmath>
#include <set>

#include "grace/evolution.hpp"
#include "grace/sim_backend.hpp"

using namespace grace;

namespace {

const std::vector<PassId> kAb{"a", "b"};

// Smooth toy landscape with a known optimum: length 5, all "a", fitness 0.
double toy_fitness(const PassSequence& s) {
  double penalty = std::abs(static_cast<double>(s.size()) - 5.0);
  for (const auto& p : s.passes)
    if (p == "b") penalty += 1.0;
  return -penalty;
}

}  // namespace

TEST_CASE("config validation") {
  GaConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  GaConfig small = cfg;
  small.population_size = 3;
  CHECK_THROWS_AS(small.validate(), GraceError);
  GaConfig bad_rate = cfg;
  bad_rate.mutation_rate = 1.5;
  CHECK_THROWS_AS(bad_rate.validate(), GraceError);
  GaConfig elite = cfg;
  elite.elitism = elite.population_size;
  CHECK_THROWS_AS(elite.validate(), GraceError);
  CHECK_THROWS_AS(run_ga({}, {}, cfg, toy_fitness), GraceError);
}

TEST_CASE("ga is deterministic under its seed") {
  GaConfig cfg;
  cfg.population_size = 12;
  cfg.generations = 15;
  cfg.rng_seed = 77;
  auto [b1, f1] = run_ga({}, kAb, cfg, toy_fitness);
  auto [b2, f2] = run_ga({}, kAb, cfg, toy_fitness);
  CHECK(b1 == b2);
  CHECK(f1 == f2);
}

TEST_CASE("ga solves the toy landscape") {
  GaConfig cfg;
  cfg.population_size = 20;
  cfg.generations = 40;
  cfg.rng_seed = 3;
  auto [best, fit] = run_ga({}, kAb, cfg, toy_fitness);
  CHECK(fit == doctest::Approx(0.0));
  CHECK(best.size() == 5);
  for (const auto& p : best.passes) CHECK(p == "a");
}

TEST_CASE("zero generations returns the best initial individual") {
  GaConfig cfg;
  cfg.generations = 0;
  cfg.population_size = 10;
  cfg.rng_seed = 5;
  GaTrace trace;
  std::size_t evals = 0;
  auto [best, fit] = run_ga({}, kAb, cfg,
                            [&](const PassSequence& s) {
                              ++evals;
                              return toy_fitness(s);
                            },
                            &trace);
  CHECK(evals == cfg.population_size);
  REQUIRE(trace.best_by_generation.size() == 1);
  CHECK(trace.best_by_generation[0] == fit);
}

TEST_CASE("half the initial population comes from the seeds") {
  GaConfig cfg;
  cfg.generations = 0;
  cfg.population_size = 9;  // ceil(9 * 0.5) = 5 seeded slots
  cfg.rng_seed = 8;
  std::vector<PassSequence> seeds;
  for (int i = 0; i < 7; ++i)
    seeds.push_back(PassSequence{std::vector<PassId>(i + 1, "a")});
  std::set<std::string> seed_keys;
  for (const auto& s : seeds) seed_keys.insert(s.key());

  std::vector<PassSequence> initial;
  run_ga(seeds, kAb, cfg, [&](const PassSequence& s) {
    initial.push_back(s);
    return 0.0;
  });
  REQUIRE(initial.size() == 9);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(seed_keys.count(initial[i].key()) == 1);
    seen.insert(initial[i].key());
  }
  CHECK(seen.size() == 5);  // sampled without replacement
}

TEST_CASE("fewer seeds than slots cycles them") {
  GaConfig cfg;
  cfg.generations = 0;
  cfg.population_size = 8;  // 4 seeded slots
  std::vector<PassSequence> seeds{PassSequence{{"a", "a"}}};
  std::vector<PassSequence> initial;
  run_ga(seeds, kAb, cfg, [&](const PassSequence& s) {
    initial.push_back(s);
    return 0.0;
  });
  for (std::size_t i = 0; i < 4; ++i) CHECK(initial[i] == seeds[0]);
}

TEST_CASE("every evaluated individual stays inside the alphabet") {
  GaConfig cfg;
  cfg.population_size = 14;
  cfg.generations = 25;
  cfg.max_len = 12;
  cfg.rng_seed = 99;
  std::vector<PassId> alphabet{"x", "y", "z"};
  bool closed = true;
  std::size_t max_seen = 0;
  run_ga({PassSequence{{"x", "z"}}}, alphabet, cfg, [&](const PassSequence& s) {
    if (s.empty()) closed = false;
    max_seen = std::max(max_seen, s.size());
    for (const auto& p : s.passes)
      if (p != "x" && p != "y" && p != "z") closed = false;
    return toy_fitness(s);
  });
  CHECK(closed);
  CHECK(max_seen <= cfg.max_len);
}

TEST_CASE("elitism makes the running best non-decreasing") {
  GaConfig cfg;
  cfg.population_size = 10;
  cfg.generations = 30;
  cfg.rng_seed = 17;
  GaTrace trace;
  run_ga({}, kAb, cfg, toy_fitness, &trace);
  REQUIRE(trace.best_by_generation.size() == cfg.generations + 1);
  for (std::size_t i = 1; i < trace.best_by_generation.size(); ++i)
    CHECK(trace.best_by_generation[i] >= trace.best_by_generation[i - 1]);
}

TEST_CASE("evolve_cluster improves on its best seed") {
  SimBackend b;
  auto members = b.generate_corpus(4, 51, "f");  // 12 programs, 3 families
  // keep only family 0 (ids f0_*)
  std::vector<ProgramHandle> fam0;
  for (const auto& p : members)
    if (p.id.substr(0, 2) == "f0") fam0.push_back(p);
  REQUIRE(fam0.size() == 4);

  std::vector<PassSequence> c_seq{PassSequence{{"pA0", "pB0"}}};
  PassPool pool;
  pool.passes = {"pA0", "pB0", "pC0", "pC1"};
  GaConfig cfg;
  cfg.population_size = 16;
  cfg.generations = 12;
  cfg.rng_seed = 2;

  auto seed_rank = evaluate_sequences(b, c_seq, fam0);
  auto entry = evolve_cluster(b, fam0, c_seq, pool, cfg);
  CHECK(entry.fitness >= seed_rank[0].score);
  CHECK(entry.fitness == doctest::Approx(weighted_score(entry.stats)));
  for (const auto& p : entry.sequence.passes) CHECK(pool.contains(p));

  CHECK_THROWS_AS(evolve_cluster(b, {}, c_seq, pool, cfg), GraceError);
  CHECK_THROWS_AS(evolve_cluster(b, fam0, c_seq, PassPool{}, cfg), GraceError);
}

TEST_CASE("evolve_all is per-cluster deterministic and parallel-safe") {
  SimBackend b;
  auto corpus = b.generate_corpus(5, 33, "f");  // 15 programs
  // cluster by family, which the ids encode
  Clustering cl;
  cl.k = 3;
  cl.centroids.assign(3, {0.0});
  for (const auto& p : corpus)
    cl.assignment[p.id] = static_cast<std::size_t>(p.id[1] - '0');

  std::vector<PassSequence> c_seq{
      PassSequence{{"pA0", "pB0"}}, PassSequence{{"pA1", "pB1"}},
      PassSequence{{"pA2", "pB2"}}};
  PassPool pool;
  pool.passes = {"pA0", "pB0", "pA1", "pB1", "pA2", "pB2", "pC0"};
  GaConfig cfg;
  cfg.population_size = 12;
  cfg.generations = 8;
  cfg.rng_seed = 4;

  auto serial = evolve_all(b, cl, corpus, c_seq, pool, cfg, {}, 1);
  auto parallel = evolve_all(b, cl, corpus, c_seq, pool, cfg, {}, 4);
  REQUIRE(serial.size() == 3);
  REQUIRE(parallel.size() == 3);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(serial[j].cluster_index == j);
    CHECK(serial[j].sequence == parallel[j].sequence);
    CHECK(serial[j].fitness == doctest::Approx(parallel[j].fitness));
  }

  auto m = coreset_metrics(serial);
  CHECK(m.avg.size() == 3);
  CHECK(m.std_dev.size() == 3);
  CHECK(m.neg_rate.size() == 3);
  CHECK_THROWS_AS(coreset_metrics({}), GraceError);

  ProgramHandle stranger;
  stranger.id = "not_clustered";
  auto bad_corpus = corpus;
  bad_corpus.push_back(stranger);
  CHECK_THROWS_AS(evolve_all(b, cl, bad_corpus, c_seq, pool, cfg), GraceError);
}
