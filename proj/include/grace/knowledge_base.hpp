#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "grace/candidates.hpp"
#include "grace/clustering.hpp"
#include "grace/common.hpp"
#include "grace/embedding.hpp"
#include "grace/evolution.hpp"
#include "grace/synergy.hpp"

#include "json.hpp"

namespace grace {

using Json = nlohmann::ordered_json;

// Persisted pipeline artifacts. Stage sections are optional: a section is
// present iff its stage ran. Serialized as a single human-inspectable JSON
// file; saves are atomic (write temp, rename).
struct KnowledgeBase {
  static constexpr int kVersion = 1;

  std::string backend_name;
  std::size_t feature_dim = 0;
  std::vector<PassId> universe;
  PassSequence oz_seq;

  std::optional<SynergyGraph> synergy;

  std::optional<std::vector<RankedSequence>> ranked;
  std::optional<std::vector<PassSequence>> c_seq;
  std::optional<PassPool> p_pool;

  std::optional<EncoderParams> encoder;
  std::optional<std::vector<double>> epoch_losses;

  std::optional<Clustering> clustering;

  std::optional<std::vector<CoresetEntry>> coreset;

  // Deterministic provenance: stage name + the seed it ran under.
  std::vector<std::pair<std::string, std::uint64_t>> provenance;
};

namespace kb_json {

inline Json stats_to_json(const DistributionStats& s) {
  return Json{{"avg", s.avg}, {"std", s.std_dev}, {"neg_rate", s.neg_rate}};
}

inline DistributionStats stats_from_json(const Json& j) {
  DistributionStats s;
  s.avg = j.at("avg").get<double>();
  s.std_dev = j.at("std").get<double>();
  s.neg_rate = j.at("neg_rate").get<double>();
  return s;
}

inline Json mlp_to_json(const Mlp& m) {
  Json layers = Json::array();
  for (const auto& l : m.layers) {
    layers.push_back(Json{{"in", l.in},
                          {"out", l.out},
                          {"relu", l.relu},
                          {"w", l.w},
                          {"b", l.b}});
  }
  return layers;
}

inline Mlp mlp_from_json(const Json& j) {
  Mlp m;
  for (const auto& lj : j) {
    DenseLayer l(lj.at("in").get<std::size_t>(), lj.at("out").get<std::size_t>(),
                 lj.at("relu").get<bool>());
    l.w = lj.at("w").get<std::vector<double>>();
    l.b = lj.at("b").get<std::vector<double>>();
    if (l.w.size() != l.in * l.out || l.b.size() != l.out)
      throw GraceError("kb: encoder layer shape mismatch");
    m.layers.push_back(std::move(l));
  }
  if (m.layers.empty()) throw GraceError("kb: empty mlp");
  return m;
}

}  // namespace kb_json

inline Json kb_to_json(const KnowledgeBase& kb) {
  Json j;
  j["version"] = KnowledgeBase::kVersion;
  j["backend"] = {{"name", kb.backend_name},
                  {"feature_dim", kb.feature_dim},
                  {"universe", kb.universe},
                  {"oz_sequence", kb.oz_seq.passes}};
  Json prov = Json::array();
  for (const auto& [stage, seed] : kb.provenance)
    prov.push_back(Json{{"stage", stage}, {"seed", seed}});
  j["provenance"] = prov;

  if (kb.synergy) {
    Json edges = Json::array();
    for (const auto& [e, support] : kb.synergy->edges)
      edges.push_back(Json{{"a", e.first},
                           {"b", e.second},
                           {"support", support},
                           {"self", e.first == e.second}});
    j["synergy"] = {{"nodes", std::vector<PassId>(kb.synergy->nodes.begin(),
                                                  kb.synergy->nodes.end())},
                    {"edges", edges}};
  }
  if (kb.ranked) {
    Json rj = Json::array();
    for (const auto& r : *kb.ranked)
      rj.push_back(Json{{"sequence", r.sequence.passes},
                        {"stats", kb_json::stats_to_json(r.stats)},
                        {"score", r.score}});
    Json cj = Json::array();
    for (const auto& s : *kb.c_seq) cj.push_back(s.passes);
    j["candidates"] = {{"ranked", rj},
                       {"c_seq", cj},
                       {"p_pool", kb.p_pool->ordered()}};
  }
  if (kb.encoder) {
    j["encoder"] = {{"norm_mean", kb.encoder->norm.mean},
                    {"norm_std", kb.encoder->norm.std_dev},
                    {"encoder", kb_json::mlp_to_json(kb.encoder->encoder)},
                    {"projection", kb_json::mlp_to_json(kb.encoder->projection)},
                    {"epoch_losses", kb.epoch_losses.value_or(
                                         std::vector<double>{})}};
  }
  if (kb.clustering) {
    Json assign = Json::object();
    for (const auto& [id, c] : kb.clustering->assignment) assign[id] = c;
    j["clustering"] = {{"k", kb.clustering->k},
                       {"centroids", kb.clustering->centroids},
                       {"assignment", assign},
                       {"objective", kb.clustering->objective}};
  }
  if (kb.coreset) {
    Json cj = Json::array();
    for (const auto& e : *kb.coreset)
      cj.push_back(Json{{"cluster_index", e.cluster_index},
                        {"sequence", e.sequence.passes},
                        {"stats", kb_json::stats_to_json(e.stats)},
                        {"fitness", e.fitness}});
    j["coreset"] = cj;
  }
  return j;
}

inline KnowledgeBase kb_from_json(const Json& j) {
  KnowledgeBase kb;
  try {
    if (j.at("version").get<int>() != KnowledgeBase::kVersion)
      throw GraceError("kb: unsupported version");
    const auto& bj = j.at("backend");
    kb.backend_name = bj.at("name").get<std::string>();
    kb.feature_dim = bj.at("feature_dim").get<std::size_t>();
    kb.universe = bj.at("universe").get<std::vector<PassId>>();
    kb.oz_seq = PassSequence{bj.at("oz_sequence").get<std::vector<PassId>>()};
    for (const auto& pj : j.at("provenance"))
      kb.provenance.emplace_back(pj.at("stage").get<std::string>(),
                                 pj.at("seed").get<std::uint64_t>());

    if (j.contains("synergy")) {
      SynergyGraph g;
      for (const auto& n : j["synergy"].at("nodes"))
        g.nodes.insert(n.get<PassId>());
      for (const auto& ej : j["synergy"].at("edges"))
        g.edges[{ej.at("a").get<PassId>(), ej.at("b").get<PassId>()}] =
            ej.at("support").get<std::size_t>();
      kb.synergy = std::move(g);
    }
    if (j.contains("candidates")) {
      std::vector<RankedSequence> ranked;
      for (const auto& rj : j["candidates"].at("ranked")) {
        RankedSequence r;
        r.sequence =
            PassSequence{rj.at("sequence").get<std::vector<PassId>>()};
        r.stats = kb_json::stats_from_json(rj.at("stats"));
        r.score = rj.at("score").get<double>();
        ranked.push_back(std::move(r));
      }
      kb.ranked = std::move(ranked);
      std::vector<PassSequence> c_seq;
      for (const auto& sj : j["candidates"].at("c_seq"))
        c_seq.push_back(PassSequence{sj.get<std::vector<PassId>>()});
      kb.c_seq = std::move(c_seq);
      PassPool pool;
      for (const auto& pj : j["candidates"].at("p_pool"))
        pool.passes.insert(pj.get<PassId>());
      kb.p_pool = std::move(pool);
    }
    if (j.contains("encoder")) {
      EncoderParams p;
      p.norm.mean = j["encoder"].at("norm_mean").get<std::vector<double>>();
      p.norm.std_dev = j["encoder"].at("norm_std").get<std::vector<double>>();
      p.encoder = kb_json::mlp_from_json(j["encoder"].at("encoder"));
      p.projection = kb_json::mlp_from_json(j["encoder"].at("projection"));
      kb.encoder = std::move(p);
      kb.epoch_losses =
          j["encoder"].at("epoch_losses").get<std::vector<double>>();
    }
    if (j.contains("clustering")) {
      Clustering c;
      c.k = j["clustering"].at("k").get<std::size_t>();
      c.centroids =
          j["clustering"].at("centroids").get<std::vector<std::vector<double>>>();
      c.objective = j["clustering"].at("objective").get<double>();
      for (const auto& [id, cj] : j["clustering"].at("assignment").items())
        c.assignment[id] = cj.get<std::size_t>();
      kb.clustering = std::move(c);
    }
    if (j.contains("coreset")) {
      std::vector<CoresetEntry> coreset;
      for (const auto& ej : j["coreset"]) {
        CoresetEntry e;
        e.cluster_index = ej.at("cluster_index").get<std::size_t>();
        e.sequence = PassSequence{ej.at("sequence").get<std::vector<PassId>>()};
        e.stats = kb_json::stats_from_json(ej.at("stats"));
        e.fitness = ej.at("fitness").get<double>();
        coreset.push_back(std::move(e));
      }
      kb.coreset = std::move(coreset);
    }
  } catch (const nlohmann::json::exception& e) {
    throw GraceError(std::string("kb: malformed file: ") + e.what());
  }

  // Internal consistency.
  if (kb.p_pool) {
    std::set<PassId> uni(kb.universe.begin(), kb.universe.end());
    for (const auto& id : kb.p_pool->passes)
      if (!uni.count(id))
        throw GraceError("kb: p_pool pass outside universe: " + id);
  }
  if (kb.encoder && kb.encoder->encoder.input_dim() != kb.feature_dim)
    throw GraceError("kb: encoder input dim does not match feature dim");
  if (kb.coreset && kb.clustering &&
      kb.coreset->size() != kb.clustering->k)
    throw GraceError("kb: coreset length does not match cluster count");
  return kb;
}

inline void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw GraceError("cannot write kb: " + tmp.string());
    out << kb_to_json(kb).dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

inline KnowledgeBase load_kb(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GraceError("cannot open kb: " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw GraceError(std::string("kb: parse error: ") + e.what());
  }
  return kb_from_json(j);
}

}  // namespace grace
