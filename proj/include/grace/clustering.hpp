#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "grace/common.hpp"
#include "grace/embedding.hpp"

namespace grace {

struct LabeledPoint {
  std::string id;
  std::vector<double> vec;
};

struct Clustering {
  std::size_t k = 0;
  std::vector<std::vector<double>> centroids;
  std::map<std::string, std::size_t> assignment;  // program id -> cluster
  double objective = 0.0;  // sum of squared distances to assigned centroid

  std::vector<std::vector<std::size_t>> members_by_cluster(
      const std::vector<LabeledPoint>& points) const {
    std::vector<std::vector<std::size_t>> m(k);
    for (std::size_t i = 0; i < points.size(); ++i)
      m[assignment.at(points[i].id)].push_back(i);
    return m;
  }
};

namespace detail {

inline std::size_t nearest_centroid(
    const std::vector<double>& x,
    const std::vector<std::vector<double>>& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    double d = squared_distance(x, centroids[j]);
    if (d < best_d) {  // ties to lowest index
      best_d = d;
      best = j;
    }
  }
  return best;
}

inline double kmeans_objective(const std::vector<LabeledPoint>& points,
                               const std::vector<std::vector<double>>& centroids,
                               const std::vector<std::size_t>& assign) {
  double obj = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    obj += squared_distance(points[i].vec, centroids[assign[i]]);
  return obj;
}

}  // namespace detail

// Lloyd iterations with k-means++ seeding, run to an assignment fixpoint or
// max_iter. Empty clusters are repaired by reseeding from the point farthest
// from its centroid. The objective is asserted non-increasing each step.
inline Clustering kmeans_fit(const std::vector<LabeledPoint>& points,
                             std::size_t k, std::uint64_t rng_seed,
                             std::size_t max_iter = 100) {
  if (k == 0) throw GraceError("kmeans: k must be >= 1");
  if (points.size() < k) throw GraceError("kmeans: fewer points than k");
  Rng rng(rng_seed);

  // Greedy k-means++ seeding: several D^2-sampled candidates per step, keep
  // the one that most lowers the potential. Markedly better than plain ++ at
  // landing in the global basin on small inputs.
  std::vector<std::vector<double>> centroids;
  {
    std::uniform_int_distribution<std::size_t> uniform(0, points.size() - 1);
    centroids.push_back(points[uniform(rng)].vec);
    std::vector<double> d2(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
      d2[i] = squared_distance(points[i].vec, centroids[0]);
    const std::size_t n_cand =
        2 + static_cast<std::size_t>(std::log2(static_cast<double>(k) + 1.0));
    while (centroids.size() < k) {
      double total = 0.0;
      for (double v : d2) total += v;
      std::size_t best_pick = 0;
      double best_pot = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < n_cand; ++c) {
        std::size_t pick = uniform(rng);
        if (total > 0.0) {
          std::uniform_real_distribution<double> u(0.0, total);
          double r = u(rng);
          pick = 0;
          while (pick + 1 < points.size() && r >= d2[pick]) r -= d2[pick++];
        }
        double pot = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i)
          pot += std::min(d2[i],
                          squared_distance(points[i].vec, points[pick].vec));
        if (pot < best_pot) {
          best_pot = pot;
          best_pick = pick;
        }
      }
      centroids.push_back(points[best_pick].vec);
      for (std::size_t i = 0; i < points.size(); ++i)
        d2[i] = std::min(
            d2[i], squared_distance(points[i].vec, centroids.back()));
    }
  }

  std::vector<std::size_t> assign(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    assign[i] = detail::nearest_centroid(points[i].vec, centroids);

  double prev_obj = detail::kmeans_objective(points, centroids, assign);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    // Update step: centroids become means of their members.
    std::vector<std::vector<double>> sums(
        k, std::vector<double>(points.front().vec.size(), 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      for (std::size_t d = 0; d < points[i].vec.size(); ++d)
        sums[assign[i]][d] += points[i].vec[d];
      ++counts[assign[i]];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] > 0) {
        for (auto& v : sums[j]) v /= static_cast<double>(counts[j]);
        centroids[j] = sums[j];
      } else {
        // Repair: reseed from the point farthest from its centroid.
        std::size_t far_i = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
          double d = squared_distance(points[i].vec, centroids[assign[i]]);
          if (d > far_d) {
            far_d = d;
            far_i = i;
          }
        }
        centroids[j] = points[far_i].vec;
      }
    }
    std::vector<std::size_t> next(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
      next[i] = detail::nearest_centroid(points[i].vec, centroids);
    double obj = detail::kmeans_objective(points, centroids, next);
    if (obj > prev_obj + 1e-9)
      throw GraceError("kmeans: objective increased (internal error)");
    bool fixpoint = (next == assign);
    assign = std::move(next);
    prev_obj = obj;
    if (fixpoint) break;
  }

  // Hartigan-style polish: move single points between clusters whenever the
  // exact objective change (accounting for the centroid shifts) is negative.
  // This escapes local minima that Lloyd's batch updates cannot leave.
  {
    const std::size_t dim = points.front().vec.size();
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t a : assign) ++counts[a];
    auto recompute_means = [&] {
      for (std::size_t j = 0; j < k; ++j)
        if (counts[j] > 0) centroids[j].assign(dim, 0.0);
      for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t d = 0; d < dim; ++d)
          centroids[assign[i]][d] += points[i].vec[d];
      for (std::size_t j = 0; j < k; ++j)
        if (counts[j] > 0)
          for (auto& v : centroids[j]) v /= static_cast<double>(counts[j]);
    };
    recompute_means();
    for (std::size_t sweep = 0; sweep < max_iter; ++sweep) {
      bool moved = false;
      for (std::size_t i = 0; i < points.size(); ++i) {
        std::size_t s = assign[i];
        if (counts[s] <= 1) continue;
        double ns = static_cast<double>(counts[s]);
        double out_gain =
            ns / (ns - 1.0) * squared_distance(points[i].vec, centroids[s]);
        std::size_t best_t = s;
        double best_delta = -1e-12;
        for (std::size_t t = 0; t < k; ++t) {
          if (t == s) continue;
          double nt = static_cast<double>(counts[t]);
          double delta =
              nt / (nt + 1.0) * squared_distance(points[i].vec, centroids[t]) -
              out_gain;
          if (delta < best_delta) {
            best_delta = delta;
            best_t = t;
          }
        }
        if (best_t != s) {
          --counts[s];
          ++counts[best_t];
          assign[i] = best_t;
          recompute_means();
          moved = true;
        }
      }
      if (!moved) break;
    }
    double obj = detail::kmeans_objective(points, centroids, assign);
    if (obj > prev_obj + 1e-9)
      throw GraceError("kmeans: objective increased (internal error)");
    prev_obj = obj;
  }

  Clustering c;
  c.k = k;
  c.centroids = std::move(centroids);
  c.objective = prev_obj;
  for (std::size_t i = 0; i < points.size(); ++i)
    c.assignment[points[i].id] = assign[i];
  return c;
}

// Best of `restarts` seeded fits by objective. Restarts run in parallel.
inline Clustering kmeans_fit_restarts(const std::vector<LabeledPoint>& points,
                                      std::size_t k, std::uint64_t master_seed,
                                      std::size_t restarts = 10,
                                      std::size_t max_iter = 100,
                                      unsigned jobs = 1) {
  std::vector<Clustering> fits(restarts);
  parallel_for(restarts, jobs, [&](std::size_t r) {
    fits[r] = kmeans_fit(points, k, mix_seed(master_seed, r), max_iter);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r)
    if (fits[r].objective < fits[best].objective) best = r;
  return fits[best];
}

// Mean silhouette coefficient, Euclidean distances. Points in singleton
// clusters contribute 0.
inline double silhouette(const std::vector<LabeledPoint>& points,
                         const Clustering& c) {
  if (c.k < 2) throw GraceError("silhouette: requires k >= 2");
  auto members = c.members_by_cluster(points);
  auto dist = [&](std::size_t i, std::size_t j) {
    return std::sqrt(squared_distance(points[i].vec, points[j].vec));
  };
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t ci = c.assignment.at(points[i].id);
    if (members[ci].size() <= 1) continue;  // singleton convention: 0
    double a = 0.0;
    for (std::size_t j : members[ci])
      if (j != i) a += dist(i, j);
    a /= static_cast<double>(members[ci].size() - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t cj = 0; cj < c.k; ++cj) {
      if (cj == ci || members[cj].empty()) continue;
      double m = 0.0;
      for (std::size_t j : members[cj]) m += dist(i, j);
      b = std::min(b, m / static_cast<double>(members[cj].size()));
    }
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(points.size());
}

// Davies-Bouldin index: mean over clusters of max_{j != i}
// (s_i + s_j) / d(mu_i, mu_j) with s the mean member-to-centroid distance.
// Coinciding centroids are an error, not silently fudged.
inline double davies_bouldin(const std::vector<LabeledPoint>& points,
                             const Clustering& c) {
  if (c.k < 2) throw GraceError("davies_bouldin: requires k >= 2");
  auto members = c.members_by_cluster(points);
  std::vector<double> scatter(c.k, 0.0);
  for (std::size_t j = 0; j < c.k; ++j) {
    for (std::size_t i : members[j])
      scatter[j] += std::sqrt(squared_distance(points[i].vec, c.centroids[j]));
    if (!members[j].empty())
      scatter[j] /= static_cast<double>(members[j].size());
  }
  double total = 0.0;
  for (std::size_t i = 0; i < c.k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < c.k; ++j) {
      if (i == j) continue;
      double d = std::sqrt(squared_distance(c.centroids[i], c.centroids[j]));
      if (d == 0.0)
        throw GraceError("davies_bouldin: coinciding centroids");
      worst = std::max(worst, (scatter[i] + scatter[j]) / d);
    }
    total += worst;
  }
  return total / static_cast<double>(c.k);
}

struct SweepRow {
  std::size_t k = 0;
  double silhouette = 0.0;
  double dbi = 0.0;
};

// Quality metrics for each k in [k_lo, k_hi], from independent seeded fits.
inline std::vector<SweepRow> sweep_k(const std::vector<LabeledPoint>& points,
                                     std::size_t k_lo, std::size_t k_hi,
                                     std::uint64_t seed,
                                     std::size_t restarts = 10,
                                     unsigned jobs = 1) {
  std::vector<SweepRow> rows;
  if (k_hi < k_lo) return rows;
  if (k_lo < 2 || k_hi > points.size())
    throw GraceError("sweep_k: range must lie within [2, |points|]");
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    Clustering c =
        kmeans_fit_restarts(points, k, mix_seed(seed, k), restarts, 100, jobs);
    rows.push_back({k, silhouette(points, c), davies_bouldin(points, c)});
  }
  return rows;
}

}  // namespace grace
