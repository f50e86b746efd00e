#pragma once

// Independent oracles used by tests only. Deliberately straightforward
// transcriptions, kept separate from the implementation paths they check.

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "grace/backend.hpp"
#include "grace/clustering.hpp"
#include "grace/synergy.hpp"

namespace grace_test {

// Literal transcription of the pairwise synergy scan: V = count(P),
// V_B = count(P after B), V_AB = count(P after <A, B>); keep (A, B) when
// V_B < V and V_AB < V_B.
inline std::set<grace::SynergyPair> brute_force_synergy(
    const grace::Backend& backend, const grace::ProgramHandle& p) {
  std::set<grace::SynergyPair> out;
  const auto& universe = backend.pass_universe();
  std::int64_t v = backend.instruction_count(p, grace::PassSequence{}).count;
  for (const auto& b : universe) {
    auto rb = backend.instruction_count(p, grace::PassSequence{{b}});
    if (!rb.ok() || rb.count >= v) continue;
    for (const auto& a : universe) {
      auto rab = backend.instruction_count(p, grace::PassSequence{{a, b}});
      if (rab.ok() && rab.count < rb.count) out.insert({a, b});
    }
  }
  return out;
}

// Exhaustive k-means optimum: tries every assignment of n points to k
// clusters, centroid = member mean.
inline double exhaustive_kmeans_objective(
    const std::vector<grace::LabeledPoint>& points, std::size_t k) {
  const std::size_t n = points.size();
  const std::size_t dim = points.front().vec.size();
  std::size_t combos = 1;
  for (std::size_t i = 0; i < n; ++i) combos *= k;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> assign(n);
  for (std::size_t code = 0; code < combos; ++code) {
    std::size_t c = code;
    for (std::size_t i = 0; i < n; ++i) {
      assign[i] = c % k;
      c /= k;
    }
    std::vector<std::vector<double>> mean(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) mean[assign[i]][d] += points[i].vec[d];
      ++cnt[assign[i]];
    }
    for (std::size_t j = 0; j < k; ++j)
      if (cnt[j])
        for (auto& v : mean[j]) v /= static_cast<double>(cnt[j]);
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      obj += grace::squared_distance(points[i].vec, mean[assign[i]]);
    best = std::min(best, obj);
  }
  return best;
}

// Plain reimplementations of silhouette and Davies-Bouldin over an explicit
// label vector.
inline double silhouette_reference(
    const std::vector<std::vector<double>>& pts,
    const std::vector<std::size_t>& labels, std::size_t k) {
  auto dist = [&](std::size_t i, std::size_t j) {
    return std::sqrt(grace::squared_distance(pts[i], pts[j]));
  };
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::size_t own = 0;
    double a = 0.0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (j == i || labels[j] != labels[i]) continue;
      a += dist(i, j);
      ++own;
    }
    if (own == 0) continue;
    a /= static_cast<double>(own);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == labels[i]) continue;
      double s = 0.0;
      std::size_t m = 0;
      for (std::size_t j = 0; j < pts.size(); ++j) {
        if (labels[j] != c) continue;
        s += dist(i, j);
        ++m;
      }
      if (m) b = std::min(b, s / static_cast<double>(m));
    }
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(pts.size());
}

inline double davies_bouldin_reference(
    const std::vector<std::vector<double>>& pts,
    const std::vector<std::size_t>& labels, std::size_t k) {
  const std::size_t dim = pts.front().size();
  std::vector<std::vector<double>> centroid(k, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> cnt(k, 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t d = 0; d < dim; ++d) centroid[labels[i]][d] += pts[i][d];
    ++cnt[labels[i]];
  }
  for (std::size_t c = 0; c < k; ++c)
    for (auto& v : centroid[c]) v /= static_cast<double>(cnt[c]);
  std::vector<double> s(k, 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i)
    s[labels[i]] +=
        std::sqrt(grace::squared_distance(pts[i], centroid[labels[i]]));
  for (std::size_t c = 0; c < k; ++c) s[c] /= static_cast<double>(cnt[c]);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      double d = std::sqrt(grace::squared_distance(centroid[i], centroid[j]));
      worst = std::max(worst, (s[i] + s[j]) / d);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

}  // namespace grace_test
