#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "grace/backend.hpp"

namespace grace {

// Deterministic simulated compiler used for offline testing.
//
// A simulated program is a vector of nonnegative integer feature counters
// plus a set of boolean latent flags. Each pass applies a signed base delta
// to designated counters, and a guarded bonus delta that fires only when all
// of its required flags hold; it may also set/clear flags. Counters clamp
// at zero on subtraction. Instruction count = sum of counters + a constant
// floor. Synergy (A, B) arises when A sets a flag that B's bonus needs.

inline constexpr std::size_t kSimDim = 8;      // counters per program
inline constexpr std::size_t kSimFlags = 3;    // latent flags
inline constexpr std::int64_t kSimFloor = 20;  // constant count floor

struct SimProgram {
  std::string id;
  std::array<std::int64_t, kSimDim> counters{};
  std::array<bool, kSimFlags> flags{};
  int family = 0;  // generator bookkeeping only; never exposed as a feature
};

struct SimPass {
  PassId id;
  std::map<std::size_t, std::int64_t> base;   // counter -> signed delta
  std::vector<std::size_t> requires_flags;    // conjunction guard for bonus
  std::map<std::size_t, std::int64_t> bonus;  // fires only if guard holds
  std::vector<std::size_t> sets;
  std::vector<std::size_t> clears;
};

class SimBackend : public Backend {
public:
  SimBackend() {
    // Canonical 12-pass, 3-family fixture.
    //
    // Counters 2i and 2i+1 belong to family i (i = 0..2); counter 6
    // accumulates setup bloat and counter 7 is volatile scratch.
    // Per family i:
    //   pA{i}  enabler: sets flag i, clears the others, costs +1 on c6
    //          and +2 on c7 (setup overhead; never reduces on its own)
    //   pB{i}  reducer: base -4 on c(2i), -2 on c7; bonus (needs flag i)
    //          -10 on c(2i), -8 on c(2i+1); consumes flag i
    //   pC{i}  mild unconditional reducer: -3 on c(2i+1)
    //   pU{i}  pure bloat on the scratch counters (+10 c6, +25 c7); never
    //          beneficial, so it must stay out of P_pool. Random sequences
    //          hit pU often, which makes c6/c7 volatile under augmentation
    //          while the family counters stay comparatively stable.
    for (std::size_t i = 0; i < 3; ++i) {
      std::string fi = std::to_string(i);
      SimPass a;
      a.id = "pA" + fi;
      a.base = {{6, +1}, {7, +2}};
      a.sets = {i};
      for (std::size_t j = 0; j < 3; ++j)
        if (j != i) a.clears.push_back(j);
      add_pass(a);

      SimPass b;
      b.id = "pB" + fi;
      b.base = {{2 * i, -4}, {7, -2}};
      b.requires_flags = {i};
      b.bonus = {{2 * i, -10}, {2 * i + 1, -8}};
      b.clears = {i};
      add_pass(b);

      SimPass c;
      c.id = "pC" + fi;
      c.base = {{2 * i + 1, -3}};
      add_pass(c);

      SimPass u;
      u.id = "pU" + fi;
      u.base = {{6, +10}, {7, +25}};
      add_pass(u);
    }
    oz_seq_ = PassSequence{{"pC0", "pC0", "pC1", "pC1", "pC2", "pC2"}};
  }

  std::string name() const override { return "sim"; }

  const std::vector<PassId>& pass_universe() const override {
    return universe_;
  }

  const PassSequence& oz_sequence() const override { return oz_seq_; }

  std::size_t feature_dim() const override { return kSimDim; }

  // Registers a program and returns a handle with cached baseline/Oz counts.
  ProgramHandle add_program(SimProgram prog) {
    const std::string id = prog.id;
    programs_[id] = std::move(prog);
    ProgramHandle h;
    h.id = id;
    h.source = id;
    h.baseline_count = state_count(programs_.at(id));
    h.oz_count = apply_and_count(programs_.at(id), oz_seq_);
    return h;
  }

  // Hand-written fixture program F1 (family 0): all golden values in the
  // tests derive from this definition.
  //   counters {50, 40, 8, 6, 10, 4, 30, 20}, flags all clear
  ProgramHandle add_fixture_f1() {
    SimProgram p;
    p.id = "F1";
    p.counters = {50, 40, 8, 6, 10, 4, 30, 20};
    p.family = 0;
    return add_program(p);
  }

  // Seeded corpus: n_per_family programs per family. Family counters are
  // large, foreign family counters small, c6/c7 wide uninformative noise.
  std::vector<ProgramHandle> generate_corpus(std::size_t n_per_family,
                                             std::uint64_t seed,
                                             const std::string& id_prefix) {
    Rng rng(seed);
    std::vector<ProgramHandle> out;
    for (int fam = 0; fam < 3; ++fam) {
      for (std::size_t n = 0; n < n_per_family; ++n) {
        SimProgram p;
        p.id = id_prefix + std::to_string(fam) + "_" + std::to_string(n);
        p.family = fam;
        for (std::size_t d = 0; d < 6; ++d) {
          bool own = (d / 2 == static_cast<std::size_t>(fam));
          std::uniform_int_distribution<std::int64_t> dist(own ? 50 : 2,
                                                           own ? 90 : 12);
          p.counters[d] = dist(rng);
        }
        p.counters[6] =
            std::uniform_int_distribution<std::int64_t>(20, 120)(rng);
        p.counters[7] =
            std::uniform_int_distribution<std::int64_t>(0, 160)(rng);
        out.push_back(add_program(p));
      }
    }
    return out;
  }

  const SimProgram& program(const std::string& id) const {
    auto it = programs_.find(id);
    if (it == programs_.end())
      throw GraceError("sim backend: unknown program " + id);
    return it->second;
  }

  FeatureVector extract_features(const ProgramHandle& p) const override {
    const SimProgram& sp = program(p.source);
    return FeatureVector(sp.counters.begin(), sp.counters.end());
  }

  std::optional<FeatureVector> features_after(
      const ProgramHandle& p, const PassSequence& seq) const override {
    SimProgram sp = program(p.source);
    apply_sequence(sp, seq);
    return FeatureVector(sp.counters.begin(), sp.counters.end());
  }

protected:
  CountResult count_impl(const ProgramHandle& p,
                         const PassSequence& seq) const override {
    for (const auto& id : seq.passes) {
      if (!passes_.count(id)) return {EvalStatus::compile_error, 0};
    }
    SimProgram sp = program(p.source);
    return {EvalStatus::ok, apply_and_count(sp, seq)};
  }

private:
  void add_pass(SimPass p) {
    universe_.push_back(p.id);
    passes_[p.id] = std::move(p);
  }

  void apply_sequence(SimProgram& prog, const PassSequence& seq) const {
    for (const auto& id : seq.passes) apply_pass(prog, passes_.at(id));
  }

  static void apply_deltas(SimProgram& prog,
                           const std::map<std::size_t, std::int64_t>& deltas) {
    for (const auto& [idx, d] : deltas)
      prog.counters[idx] = std::max<std::int64_t>(0, prog.counters[idx] + d);
  }

  static void apply_pass(SimProgram& prog, const SimPass& pass) {
    apply_deltas(prog, pass.base);
    bool guard = true;
    for (std::size_t f : pass.requires_flags) guard = guard && prog.flags[f];
    if (guard) apply_deltas(prog, pass.bonus);
    for (std::size_t f : pass.sets) prog.flags[f] = true;
    for (std::size_t f : pass.clears) prog.flags[f] = false;
  }

  static std::int64_t state_count(const SimProgram& prog) {
    return std::accumulate(prog.counters.begin(), prog.counters.end(),
                           kSimFloor);
  }

  std::int64_t apply_and_count(SimProgram prog, const PassSequence& seq) const {
    apply_sequence(prog, seq);
    return state_count(prog);
  }

  std::vector<PassId> universe_;
  std::map<PassId, SimPass> passes_;
  std::map<std::string, SimProgram> programs_;
  PassSequence oz_seq_;
};

}  // namespace grace
