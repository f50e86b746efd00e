#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "grace/common.hpp"
#include "grace/types.hpp"

namespace grace {

struct CountResult {
  EvalStatus status = EvalStatus::ok;
  std::int64_t count = 0;

  bool ok() const { return status == EvalStatus::ok; }
};

// Uniform compiler abstraction. Implementations must be safe to call from
// concurrent workers: every evaluation is isolated (own temp files / own
// simulated state copy) and the memo cache is lock-guarded.
class Backend {
public:
  virtual ~Backend() = default;

  virtual std::string name() const = 0;

  // Deterministic order, nonempty, deduplicated.
  virtual const std::vector<PassId>& pass_universe() const = 0;

  // The designated baseline ("-Oz") sequence.
  virtual const PassSequence& oz_sequence() const = 0;

  virtual std::size_t feature_dim() const = 0;

  // Count with the sequence applied. Memoized per (program, sequence);
  // the empty sequence returns the baseline count.
  CountResult instruction_count(const ProgramHandle& p,
                                const PassSequence& seq) const {
    std::string k = p.id + "\x1f" + seq.key();
    {
      std::lock_guard<std::mutex> lock(cache_mutex_);
      auto it = cache_.find(k);
      if (it != cache_.end()) return it->second;
    }
    evals_.fetch_add(1, std::memory_order_relaxed);
    CountResult r = count_impl(p, seq);
    std::lock_guard<std::mutex> lock(cache_mutex_);
    cache_.emplace(std::move(k), r);
    return r;
  }

  std::int64_t oz_count(const ProgramHandle& p) const {
    if (p.oz_count > 0) return p.oz_count;
    CountResult r = instruction_count(p, oz_sequence());
    if (!r.ok()) throw GraceError("oz_count failed for program " + p.id);
    return r.count;
  }

  virtual FeatureVector extract_features(const ProgramHandle& p) const = 0;

  // Features of the program after applying `seq`; nullopt on compile error.
  // Used by contrastive-learning augmentation.
  virtual std::optional<FeatureVector> features_after(
      const ProgramHandle& p, const PassSequence& seq) const = 0;

  EvalOutcome evaluate(const ProgramHandle& p, const PassSequence& seq) const {
    EvalOutcome o;
    o.program_id = p.id;
    o.sequence = seq;
    CountResult r = instruction_count(p, seq);
    o.status = r.status;
    if (r.ok()) {
      o.instr_count = r.count;
      o.over_oz_pct =
          static_cast<double>(oz_count(p) - r.count) /
          static_cast<double>(oz_count(p)) * 100.0;
    }
    return o;
  }

  // Total non-memoized evaluations so far (audit counter).
  std::uint64_t evals_performed() const {
    return evals_.load(std::memory_order_relaxed);
  }

protected:
  virtual CountResult count_impl(const ProgramHandle& p,
                                 const PassSequence& seq) const = 0;

private:
  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<std::string, CountResult> cache_;
  mutable std::atomic<std::uint64_t> evals_{0};
};

}  // namespace grace
