#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grace/common.hpp"

namespace grace {

// A single compiler pass, identified by its flag token
// (e.g. "-simplifycfg" for LLVM, "pA0" for the simulated backend).
using PassId = std::string;

// Ordered list of passes; repetition is allowed.
struct PassSequence {
  std::vector<PassId> passes;

  PassSequence() = default;
  explicit PassSequence(std::vector<PassId> p) : passes(std::move(p)) {}

  std::size_t size() const { return passes.size(); }
  bool empty() const { return passes.empty(); }

  // Cache / map key.
  std::string key() const { return join(passes, " "); }

  PassSequence prefix(std::size_t len) const {
    return PassSequence{std::vector<PassId>(passes.begin(),
                                            passes.begin() + len)};
  }

  friend bool operator==(const PassSequence& a, const PassSequence& b) {
    return a.passes == b.passes;
  }
};

// Reference to one compilable unit plus its cached baseline counts.
struct ProgramHandle {
  std::string id;
  std::string source;        // IR file path or simulated program key
  std::int64_t baseline_count = 0;  // count with no optimization
  std::int64_t oz_count = 0;        // count under the backend's Oz sequence
};

enum class EvalStatus { ok, compile_error, timeout };

inline const char* to_string(EvalStatus s) {
  switch (s) {
    case EvalStatus::ok: return "ok";
    case EvalStatus::compile_error: return "compile_error";
    case EvalStatus::timeout: return "timeout";
  }
  return "?";
}

// Result of evaluating one (program, sequence) pair.
struct EvalOutcome {
  std::string program_id;
  PassSequence sequence;
  std::int64_t instr_count = 0;  // valid only when status == ok
  double over_oz_pct = 0.0;      // valid only when status == ok
  EvalStatus status = EvalStatus::ok;

  bool ok() const { return status == EvalStatus::ok; }
};

using FeatureVector = std::vector<double>;

}  // namespace grace
