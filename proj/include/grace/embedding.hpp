#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "grace/backend.hpp"
#include "grace/common.hpp"
#include "grace/mlp.hpp"

namespace grace {

// Per-dimension z-score normalization, fitted once on the training corpus
// and frozen (the Gaussian kernel is scale-sensitive).
struct FeatureNorm {
  std::vector<double> mean;
  std::vector<double> std_dev;

  static FeatureNorm fit(const std::vector<FeatureVector>& xs) {
    if (xs.empty()) throw GraceError("FeatureNorm: empty corpus");
    std::size_t d = xs.front().size();
    FeatureNorm n;
    n.mean.assign(d, 0.0);
    n.std_dev.assign(d, 0.0);
    for (const auto& x : xs)
      for (std::size_t i = 0; i < d; ++i) n.mean[i] += x[i];
    for (auto& m : n.mean) m /= static_cast<double>(xs.size());
    for (const auto& x : xs)
      for (std::size_t i = 0; i < d; ++i)
        n.std_dev[i] += (x[i] - n.mean[i]) * (x[i] - n.mean[i]);
    for (auto& s : n.std_dev) {
      s = std::sqrt(s / static_cast<double>(xs.size()));
      if (s == 0.0) s = 1.0;  // constant dims pass through centered
    }
    return n;
  }

  static FeatureNorm identity(std::size_t dim) {
    FeatureNorm n;
    n.mean.assign(dim, 0.0);
    n.std_dev.assign(dim, 1.0);
    return n;
  }

  FeatureVector apply(const FeatureVector& x) const {
    FeatureVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      out[i] = (x[i] - mean[i]) / std_dev[i];
    return out;
  }
};

// Encoder f_enc (features -> embedding) and projection head f_proj
// (embedding -> contrastive space). The encoder alone produces the program
// embedding used downstream; the projection head exists only for the loss.
struct EncoderParams {
  Mlp encoder;
  Mlp projection;
  FeatureNorm norm;

  static EncoderParams make(std::size_t feature_dim, std::size_t hidden = 64,
                            std::size_t embed_dim = 32,
                            std::size_t proj_dim = 16) {
    EncoderParams p;
    p.encoder.layers.emplace_back(feature_dim, hidden, true);
    p.encoder.layers.emplace_back(hidden, embed_dim, false);
    p.projection.layers.emplace_back(embed_dim, proj_dim, false);
    p.norm = FeatureNorm::identity(feature_dim);
    return p;
  }

  std::size_t embed_dim() const { return encoder.output_dim(); }
};

using Embedding = std::vector<double>;

inline double squared_distance(const std::vector<double>& a,
                               const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Gaussian-kernel similarity: exp(-||a - b||^2 / tau), in (0, 1].
inline double similarity(const std::vector<double>& z_a,
                         const std::vector<double>& z_b, double tau) {
  if (z_a.size() != z_b.size()) throw GraceError("similarity: dim mismatch");
  if (tau <= 0.0) throw GraceError("similarity: tau must be positive");
  return std::exp(-squared_distance(z_a, z_b) / tau);
}

// Deterministic forward pass through the encoder only.
inline Embedding embed(const EncoderParams& params, const FeatureVector& x) {
  return params.encoder.forward(params.norm.apply(x));
}

// Contrastive-positive variants: features of the program after a random
// pass sequence (length uniform in [1, 20], passes uniform over the
// universe). Compile failures retry up to 5 times, then fall back to the
// unmodified features, so augmentation is total.
inline std::vector<FeatureVector> augment(const Backend& backend,
                                          const ProgramHandle& p,
                                          std::size_t n_variants,
                                          std::uint64_t rng_seed) {
  if (n_variants == 0) throw GraceError("augment: n_variants must be >= 1");
  Rng rng(rng_seed);
  const auto& universe = backend.pass_universe();
  std::uniform_int_distribution<std::size_t> len_dist(1, 20);
  std::uniform_int_distribution<std::size_t> pass_dist(0, universe.size() - 1);
  std::vector<FeatureVector> out;
  for (std::size_t v = 0; v < n_variants; ++v) {
    std::optional<FeatureVector> feats;
    for (int attempt = 0; attempt < 5 && !feats; ++attempt) {
      PassSequence seq;
      std::size_t len = len_dist(rng);
      for (std::size_t i = 0; i < len; ++i)
        seq.passes.push_back(universe[pass_dist(rng)]);
      feats = backend.features_after(p, seq);
    }
    out.push_back(feats ? *feats : backend.extract_features(p));
  }
  return out;
}

// Pairing map for a contrastive batch: pos[a] is the index of a's positive
// partner; an involution without fixed points.
inline void validate_pairing(const std::vector<std::size_t>& pos) {
  for (std::size_t a = 0; a < pos.size(); ++a) {
    if (pos[a] >= pos.size() || pos[a] == a || pos[pos[a]] != a)
      throw GraceError("contrastive batch: invalid positive-pair map");
  }
}

// Loss and dL/dz on already-projected vectors. For each sample a,
//   L_a = -log( exp(S_{a,pos(a)}) / sum_{k != a} exp(S_{ak}) )
// with S the Gaussian-kernel similarity matrix; only the self term S_aa is
// masked from the denominator. Returns the mean of L_a.
inline double contrastive_loss_on_projections(
    const std::vector<std::vector<double>>& z,
    const std::vector<std::size_t>& pos, double tau,
    std::vector<std::vector<double>>* grad_z = nullptr) {
  const std::size_t n = z.size();
  if (n < 2) throw GraceError("contrastive loss: need at least one pair");
  validate_pairing(pos);
  std::vector<std::vector<double>> s(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      s[a][b] = similarity(z[a], z[b], tau);

  if (grad_z) grad_z->assign(n, std::vector<double>(z.front().size(), 0.0));
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    double denom = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      if (k != a) denom += std::exp(s[a][k]);
    total += -s[a][pos[a]] + std::log(denom);
    if (!grad_z) continue;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == a) continue;
      // dL_a/dS_ak, scaled by 1/n for the batch mean.
      double dl_ds = (std::exp(s[a][k]) / denom -
                      (k == pos[a] ? 1.0 : 0.0)) /
                     static_cast<double>(n);
      double dl_dd2 = dl_ds * (-s[a][k] / tau);
      for (std::size_t i = 0; i < z[a].size(); ++i) {
        double diff = 2.0 * (z[a][i] - z[k][i]);
        (*grad_z)[a][i] += dl_dd2 * diff;
        (*grad_z)[k][i] -= dl_dd2 * diff;
      }
    }
  }
  return total / static_cast<double>(n);
}

// Full loss with backprop through projection head and encoder. `batch_x`
// holds 2N normalized feature vectors; gradients come back in an
// EncoderParams-shaped pair of Mlps.
struct LossResult {
  double loss = 0.0;
  Mlp encoder_grads;
  Mlp projection_grads;
};

inline LossResult contrastive_loss(const EncoderParams& params,
                                   const std::vector<FeatureVector>& batch_x,
                                   const std::vector<std::size_t>& pos,
                                   double tau) {
  const std::size_t n = batch_x.size();
  std::vector<Mlp::Activations> enc_acts(n), proj_acts(n);
  std::vector<std::vector<double>> z(n);
  for (std::size_t a = 0; a < n; ++a) {
    auto h = params.encoder.forward(batch_x[a], &enc_acts[a]);
    z[a] = params.projection.forward(h, &proj_acts[a]);
  }
  std::vector<std::vector<double>> grad_z;
  LossResult res;
  res.loss = contrastive_loss_on_projections(z, pos, tau, &grad_z);
  res.encoder_grads = params.encoder.zeros_like();
  res.projection_grads = params.projection.zeros_like();
  for (std::size_t a = 0; a < n; ++a) {
    auto grad_h = params.projection.backward(proj_acts[a], grad_z[a],
                                             res.projection_grads);
    params.encoder.backward(enc_acts[a], grad_h, res.encoder_grads);
  }
  return res;
}

struct TrainConfig {
  std::size_t hidden_dim = 64;
  std::size_t embed_dim = 32;
  std::size_t proj_dim = 16;
  std::size_t batch_anchors = 16;  // N anchors per batch -> 2N vectors
  std::size_t epochs = 100;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  double tau = 1.0;
  std::uint64_t seed = 1;
};

// Mini-batch SGD with momentum over the contrastive objective. Each batch
// pairs N anchors with N fresh augmentations. Fully deterministic under the
// seed; throws on a non-finite loss.
inline EncoderParams train_encoder(const Backend& backend,
                                   const std::vector<ProgramHandle>& corpus,
                                   const TrainConfig& cfg,
                                   std::vector<double>* epoch_losses = nullptr) {
  if (corpus.size() < 2 * cfg.batch_anchors)
    throw GraceError("train_encoder: corpus smaller than 2 x batch size");
  std::vector<FeatureVector> raw;
  raw.reserve(corpus.size());
  for (const auto& p : corpus) raw.push_back(backend.extract_features(p));

  Rng rng(mix_seed(cfg.seed, 0x7261696e));
  EncoderParams params = EncoderParams::make(backend.feature_dim(),
                                             cfg.hidden_dim, cfg.embed_dim,
                                             cfg.proj_dim);
  params.norm = FeatureNorm::fit(raw);
  params.encoder.init_random(rng);
  params.projection.init_random(rng);

  Mlp vel_enc = params.encoder.zeros_like();
  Mlp vel_proj = params.projection.zeros_like();
  auto sgd_step = [&](Mlp& p, Mlp& vel, const Mlp& g) {
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
      auto step = [&](std::vector<double>& w, std::vector<double>& v,
                      const std::vector<double>& gw) {
        for (std::size_t i = 0; i < w.size(); ++i) {
          v[i] = cfg.momentum * v[i] - cfg.learning_rate * gw[i];
          w[i] += v[i];
        }
      };
      step(p.layers[li].w, vel.layers[li].w, g.layers[li].w);
      step(p.layers[li].b, vel.layers[li].b, g.layers[li].b);
    }
  };

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start + cfg.batch_anchors <= corpus.size();
         start += cfg.batch_anchors) {
      std::vector<FeatureVector> batch;
      std::vector<std::size_t> pos;
      for (std::size_t j = 0; j < cfg.batch_anchors; ++j) {
        std::size_t pi = order[start + j];
        auto variants = augment(backend, corpus[pi], 1, rng());
        batch.push_back(params.norm.apply(raw[pi]));
        batch.push_back(params.norm.apply(variants.front()));
        pos.push_back(batch.size() - 1);
        pos.push_back(batch.size() - 2);
      }
      LossResult res = contrastive_loss(params, batch, pos, cfg.tau);
      if (!std::isfinite(res.loss))
        throw GraceError("train_encoder: loss diverged");
      sgd_step(params.encoder, vel_enc, res.encoder_grads);
      sgd_step(params.projection, vel_proj, res.projection_grads);
      epoch_loss += res.loss;
      ++batches;
    }
    if (epoch_losses)
      epoch_losses->push_back(epoch_loss / static_cast<double>(batches));
  }
  return params;
}

}  // namespace grace
