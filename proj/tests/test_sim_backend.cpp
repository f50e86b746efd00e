#include "doctest.h"

#include <set>
#include <thread>

#include "grace/sim_backend.hpp"

using namespace grace;

TEST_CASE("pass universe is the 12-pass fixture") {
  SimBackend b;
  CHECK(b.pass_universe().size() == 12);
  std::set<PassId> dedup(b.pass_universe().begin(), b.pass_universe().end());
  CHECK(dedup.size() == 12);
}

TEST_CASE("F1 golden counts") {
  // From the fixture definition: counters {50,40,8,6,10,4,30,20}, floor 20.
  SimBackend b;
  ProgramHandle f1 = b.add_fixture_f1();
  CHECK(f1.baseline_count == 188);
  // pB0: c0 50->46, c7 20->18 (no flag, bonus does not fire)
  CHECK(b.instruction_count(f1, PassSequence{{"pB0"}}).count == 182);
  // Oz = pC0 pC0 pC1 pC1 pC2 pC2: c1 -6, c3 6->0, c5 4->0 (clamped)
  CHECK(f1.oz_count == 172);
  CHECK(b.oz_count(f1) == 172);
  // pA0 then pB0: +1 c6, +2 c7, then base -4/-2 plus bonus -10 c0, -8 c1
  CHECK(b.instruction_count(f1, PassSequence{{"pA0", "pB0"}}).count ==
        188 + 3 - 4 - 2 - 18);
}

TEST_CASE("empty sequence is the identity") {
  SimBackend b;
  auto corpus = b.generate_corpus(3, 42, "p");
  for (const auto& p : corpus)
    CHECK(b.instruction_count(p, PassSequence{}).count == p.baseline_count);
}

TEST_CASE("oz_count equals instruction_count of the oz sequence") {
  SimBackend b;
  auto corpus = b.generate_corpus(2, 7, "p");
  for (const auto& p : corpus)
    CHECK(b.oz_count(p) == b.instruction_count(p, b.oz_sequence()).count);
}

TEST_CASE("determinism of repeated calls") {
  SimBackend b;
  ProgramHandle f1 = b.add_fixture_f1();
  PassSequence seq{{"pA0", "pB0", "pC1", "pU2", "pB0"}};
  auto c1 = b.instruction_count(f1, seq).count;
  auto c2 = b.instruction_count(f1, seq).count;
  CHECK(c1 == c2);
}

TEST_CASE("unknown pass is a compile error") {
  SimBackend b;
  ProgramHandle f1 = b.add_fixture_f1();
  auto r = b.instruction_count(f1, PassSequence{{"nonsense"}});
  CHECK(r.status == EvalStatus::compile_error);
}

TEST_CASE("features are the state vector, deterministic") {
  SimBackend b;
  ProgramHandle f1 = b.add_fixture_f1();
  auto f = b.extract_features(f1);
  CHECK(f == FeatureVector{50, 40, 8, 6, 10, 4, 30, 20});
  CHECK(b.extract_features(f1) == f);
  CHECK(b.feature_dim() == f.size());
}

TEST_CASE("features_after reflects the transformed program") {
  SimBackend b;
  ProgramHandle f1 = b.add_fixture_f1();
  auto f = b.features_after(f1, PassSequence{{"pC0"}});
  REQUIRE(f.has_value());
  CHECK((*f)[1] == 37);  // c1 40 -> 37
  // bloat pass inflates only the scratch counters
  auto g = b.features_after(f1, PassSequence{{"pU1"}});
  REQUIRE(g.has_value());
  CHECK(*g == FeatureVector{50, 40, 8, 6, 10, 4, 40, 45});
}

TEST_CASE("counters clamp at zero so counts stay positive") {
  SimBackend b;
  ProgramHandle f1 = b.add_fixture_f1();
  std::vector<PassId> many;
  for (int i = 0; i < 50; ++i) {
    many.push_back("pA0");
    many.push_back("pB0");
  }
  auto r = b.instruction_count(f1, PassSequence{std::move(many)});
  CHECK(r.ok());
  CHECK(r.count >= kSimFloor);
}

TEST_CASE("concurrent evaluations agree with sequential ones") {
  SimBackend b;
  auto corpus = b.generate_corpus(4, 3, "p");
  PassSequence seq{{"pA1", "pB1"}};
  std::vector<std::int64_t> expected;
  for (const auto& p : corpus)
    expected.push_back(b.instruction_count(p, seq).count);
  SimBackend b2;
  auto corpus2 = b2.generate_corpus(4, 3, "p");
  std::vector<std::int64_t> got(corpus2.size());
  std::vector<std::thread> ts;
  for (std::size_t i = 0; i < corpus2.size(); ++i)
    ts.emplace_back([&, i] { got[i] = b2.instruction_count(corpus2[i], seq).count; });
  for (auto& t : ts) t.join();
  CHECK(got == expected);
}

TEST_CASE("corpus generation is seed-deterministic") {
  SimBackend a, b;
  auto ca = a.generate_corpus(5, 99, "x");
  auto cb = b.generate_corpus(5, 99, "x");
  REQUIRE(ca.size() == cb.size());
  for (std::size_t i = 0; i < ca.size(); ++i) {
    CHECK(ca[i].id == cb[i].id);
    CHECK(ca[i].baseline_count == cb[i].baseline_count);
    CHECK(ca[i].oz_count == cb[i].oz_count);
  }
}
