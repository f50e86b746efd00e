#include "doctest.h"

#include <cmath>

#include "grace/clustering.hpp"
#include "oracles.hpp"

using namespace grace;

namespace {

std::vector<LabeledPoint> blobs(std::size_t per_blob,
                                const std::vector<std::vector<double>>& centers,
                                double spread, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> jitter(-spread, spread);
  std::vector<LabeledPoint> pts;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      LabeledPoint p;
      p.id = "b" + std::to_string(c) + "_" + std::to_string(i);
      p.vec = centers[c];
      for (auto& v : p.vec) v += jitter(rng);
      pts.push_back(std::move(p));
    }
  }
  return pts;
}

}  // namespace

TEST_CASE("k equal to n gives a zero objective") {
  std::vector<LabeledPoint> pts{{"a", {0.0}}, {"b", {5.0}}, {"c", {9.0}}};
  auto c = kmeans_fit_restarts(pts, 3, 1, 10);
  CHECK(c.objective == doctest::Approx(0.0));
  CHECK(c.assignment.size() == 3);
}

TEST_CASE("k of one puts the centroid at the mean") {
  std::vector<LabeledPoint> pts{{"a", {0.0, 0.0}}, {"b", {4.0, 2.0}}};
  auto c = kmeans_fit(pts, 1, 3);
  REQUIRE(c.centroids.size() == 1);
  CHECK(c.centroids[0][0] == doctest::Approx(2.0));
  CHECK(c.centroids[0][1] == doctest::Approx(1.0));
  CHECK(c.objective == doctest::Approx(8.0 + 2.0));  // 2 * (4 + 1)
}

TEST_CASE("input validation") {
  std::vector<LabeledPoint> pts{{"a", {0.0}}, {"b", {1.0}}};
  CHECK_THROWS_AS(kmeans_fit(pts, 0, 1), GraceError);
  CHECK_THROWS_AS(kmeans_fit(pts, 3, 1), GraceError);
}

TEST_CASE("restarted fit reaches the exhaustive optimum on small inputs") {
  Rng rng(31);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<LabeledPoint> pts;
    for (int i = 0; i < 7; ++i)
      pts.push_back({"p" + std::to_string(i), {d(rng), d(rng)}});
    for (std::size_t k : {2u, 3u}) {
      double oracle = grace_test::exhaustive_kmeans_objective(pts, k);
      auto c = kmeans_fit_restarts(pts, k, 100 + trial, 20);
      CHECK(c.objective == doctest::Approx(oracle).epsilon(1e-9));
    }
  }
}

TEST_CASE("silhouette and davies_bouldin goldens on a hand layout") {
  // cluster {0, 2} and cluster {10, 14} in one dimension
  std::vector<LabeledPoint> pts{
      {"a", {0.0}}, {"b", {2.0}}, {"c", {10.0}}, {"d", {14.0}}};
  auto c = kmeans_fit_restarts(pts, 2, 5, 10);
  REQUIRE(c.objective == doctest::Approx(2.0 + 8.0));  // within-blob ssd
  // silhouette by hand: (10/12 + 8/10 + 5/9 + 9/13) / 4
  double expected_sil = (10.0 / 12 + 8.0 / 10 + 5.0 / 9 + 9.0 / 13) / 4.0;
  CHECK(silhouette(pts, c) == doctest::Approx(expected_sil));
  // scatters 1 and 2, centroid distance 11
  CHECK(davies_bouldin(pts, c) == doctest::Approx(3.0 / 11.0));
}

TEST_CASE("metrics agree with label-vector reference implementations") {
  auto pts = blobs(6, {{0, 0}, {8, 0}, {4, 7}}, 1.0, 9);
  auto c = kmeans_fit_restarts(pts, 3, 77, 10);
  std::vector<std::vector<double>> raw;
  std::vector<std::size_t> labels;
  for (const auto& p : pts) {
    raw.push_back(p.vec);
    labels.push_back(c.assignment.at(p.id));
  }
  CHECK(silhouette(pts, c) ==
        doctest::Approx(grace_test::silhouette_reference(raw, labels, 3)));
  CHECK(davies_bouldin(pts, c) ==
        doctest::Approx(grace_test::davies_bouldin_reference(raw, labels, 3)));
}

TEST_CASE("well-separated blobs cluster cleanly") {
  auto pts = blobs(10, {{0, 0}, {20, 0}, {0, 20}}, 0.5, 4);
  auto c = kmeans_fit_restarts(pts, 3, 11, 10);
  CHECK(silhouette(pts, c) > 0.9);
  // members of a blob share a cluster
  for (std::size_t blob = 0; blob < 3; ++blob) {
    std::size_t first = c.assignment.at("b" + std::to_string(blob) + "_0");
    for (std::size_t i = 1; i < 10; ++i)
      CHECK(c.assignment.at("b" + std::to_string(blob) + "_" +
                            std::to_string(i)) == first);
  }
}

TEST_CASE("metric preconditions") {
  std::vector<LabeledPoint> pts{{"a", {0.0}}, {"b", {1.0}}};
  auto c1 = kmeans_fit(pts, 1, 1);
  CHECK_THROWS_AS(silhouette(pts, c1), GraceError);
  CHECK_THROWS_AS(davies_bouldin(pts, c1), GraceError);
  // coinciding centroids are an error for DBI
  Clustering degenerate;
  degenerate.k = 2;
  degenerate.centroids = {{0.0}, {0.0}};
  degenerate.assignment = {{"a", 0}, {"b", 1}};
  CHECK_THROWS_AS(davies_bouldin(pts, degenerate), GraceError);
}

TEST_CASE("fits are seed-deterministic") {
  auto pts = blobs(8, {{0, 0}, {6, 6}}, 1.5, 21);
  auto c1 = kmeans_fit_restarts(pts, 2, 42, 10);
  auto c2 = kmeans_fit_restarts(pts, 2, 42, 10);
  CHECK(c1.assignment == c2.assignment);
  CHECK(c1.objective == doctest::Approx(c2.objective));
  CHECK(c1.centroids == c2.centroids);
  // parallel restarts match serial restarts
  auto c4 = kmeans_fit_restarts(pts, 2, 42, 10, 100, 4);
  CHECK(c4.assignment == c1.assignment);
  CHECK(c4.objective == doctest::Approx(c1.objective));
}

TEST_CASE("k sweep favors the true blob count") {
  auto pts = blobs(8, {{0, 0}, {15, 0}, {0, 15}, {15, 15}}, 0.8, 3);
  auto rows = sweep_k(pts, 2, 6, 19);
  REQUIRE(rows.size() == 5);
  std::size_t best_k = 0;
  double best_sil = -2.0;
  for (const auto& r : rows) {
    if (r.silhouette > best_sil) {
      best_sil = r.silhouette;
      best_k = r.k;
    }
    CHECK(r.silhouette >= -1.0);
    CHECK(r.silhouette <= 1.0);
    CHECK(r.dbi >= 0.0);
  }
  CHECK(best_k == 4);

  CHECK(sweep_k(pts, 5, 4, 1).empty());
  CHECK_THROWS_AS(sweep_k(pts, 1, 4, 1), GraceError);
  CHECK_THROWS_AS(sweep_k(pts, 2, pts.size() + 1, 1), GraceError);
}
