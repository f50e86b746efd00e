#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace grace {

// Thrown for configuration / usage errors. Per-evaluation failures are
// reported through EvalOutcome statuses instead.
class GraceError : public std::runtime_error {
public:
  explicit GraceError(const std::string& msg) : std::runtime_error(msg) {}
};

using Rng = std::mt19937_64;

// splitmix64, used to derive independent RNG streams from a master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be
// written to pre-sized slots indexed by i so output order is deterministic.
inline void parallel_for(std::size_t n, unsigned jobs,
                         const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  if (jobs == 0) jobs = std::thread::hardware_concurrency();
  if (jobs <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  std::size_t nw = std::min<std::size_t>(jobs, n);
  for (std::size_t w = 0; w < nw; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += nw) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

inline std::string join(const std::vector<std::string>& parts,
                        const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace grace
