#pragma once

#include <cmath>
#include <vector>

#include "grace/common.hpp"
#include "grace/types.hpp"

namespace grace {

// Percent instruction-count reduction relative to the Oz baseline:
// (n_oz - n_x) / n_oz * 100. Positive means better than Oz.
inline double over_oz(std::int64_t n_oz, std::int64_t n_x) {
  return static_cast<double>(n_oz - n_x) / static_cast<double>(n_oz) * 100.0;
}

struct DistributionStats {
  double avg = 0.0;       // mean OverOz percent
  double std_dev = 0.0;   // population standard deviation
  double neg_rate = 0.0;  // fraction of programs with OverOz < 0
};

struct ScoreWeights {
  double w_avg = 0.75;
  double w_std = 0.10;
  double w_neg = 0.15;
};

// OverOz contribution of a failed compilation. A sequence that breaks
// compilation must be heavily penalized, never silently dropped.
inline constexpr double kFailedOverOz = -100.0;

inline double outcome_over_oz(const EvalOutcome& o) {
  return o.ok() ? o.over_oz_pct : kFailedOverOz;
}

inline DistributionStats distribution_stats(const std::vector<double>& vals) {
  if (vals.empty()) throw GraceError("distribution_stats: no outcomes");
  double sum = 0.0;
  std::size_t neg = 0;
  for (double v : vals) {
    sum += v;
    if (v < 0.0) ++neg;
  }
  DistributionStats s;
  s.avg = sum / static_cast<double>(vals.size());
  double var = 0.0;
  for (double v : vals) var += (v - s.avg) * (v - s.avg);
  s.std_dev = std::sqrt(var / static_cast<double>(vals.size()));
  s.neg_rate = static_cast<double>(neg) / static_cast<double>(vals.size());
  return s;
}

inline DistributionStats distribution_stats(
    const std::vector<EvalOutcome>& outcomes) {
  std::vector<double> vals;
  vals.reserve(outcomes.size());
  for (const auto& o : outcomes) vals.push_back(outcome_over_oz(o));
  return distribution_stats(vals);
}

// Std and NegRate act as penalties; NegRate is rescaled to percent so all
// three terms share units.
inline double weighted_score(const DistributionStats& s,
                             const ScoreWeights& w = {}) {
  return w.w_avg * s.avg - w.w_std * s.std_dev - w.w_neg * (s.neg_rate * 100.0);
}

}  // namespace grace
