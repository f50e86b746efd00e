#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "grace/common.hpp"

namespace grace {

// Minimal dense multilayer perceptron with explicit backprop, sized for
// finite-difference verification. Doubles throughout.

struct DenseLayer {
  std::size_t in = 0, out = 0;
  bool relu = false;
  std::vector<double> w;  // row-major, out x in
  std::vector<double> b;  // out

  DenseLayer() = default;
  DenseLayer(std::size_t in_, std::size_t out_, bool relu_)
      : in(in_), out(out_), relu(relu_), w(in_ * out_, 0.0), b(out_, 0.0) {}
};

struct Mlp {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.front().in; }
  std::size_t output_dim() const { return layers.back().out; }

  void init_random(Rng& rng) {
    for (auto& l : layers) {
      double bound = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (auto& v : l.w) v = dist(rng);
      for (auto& v : l.b) v = 0.0;
    }
  }

  // Per-layer pre-activations, plus the input, kept for backprop.
  struct Activations {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;   // pre-activation per layer
    std::vector<std::vector<double>> post;  // post-activation per layer
  };

  std::vector<double> forward(const std::vector<double>& x,
                              Activations* acts = nullptr) const {
    if (x.size() != input_dim()) throw GraceError("mlp: input dim mismatch");
    if (acts) {
      acts->input = x;
      acts->pre.clear();
      acts->post.clear();
    }
    std::vector<double> cur = x;
    for (const auto& l : layers) {
      std::vector<double> nxt(l.out);
      for (std::size_t o = 0; o < l.out; ++o) {
        double s = l.b[o];
        const double* row = &l.w[o * l.in];
        for (std::size_t i = 0; i < l.in; ++i) s += row[i] * cur[i];
        nxt[o] = s;
      }
      if (acts) acts->pre.push_back(nxt);
      if (l.relu)
        for (auto& v : nxt) v = v > 0.0 ? v : 0.0;
      if (acts) acts->post.push_back(nxt);
      cur = std::move(nxt);
    }
    return cur;
  }

  // Accumulates parameter gradients into `grads` (same shape as *this) and
  // returns the gradient with respect to the input.
  std::vector<double> backward(const Activations& acts,
                               std::vector<double> grad_out,
                               Mlp& grads) const {
    for (std::size_t li = layers.size(); li-- > 0;) {
      const auto& l = layers[li];
      auto& gl = grads.layers[li];
      if (l.relu) {
        for (std::size_t o = 0; o < l.out; ++o)
          if (acts.pre[li][o] <= 0.0) grad_out[o] = 0.0;
      }
      const std::vector<double>& in =
          li == 0 ? acts.input : acts.post[li - 1];
      std::vector<double> grad_in(l.in, 0.0);
      for (std::size_t o = 0; o < l.out; ++o) {
        gl.b[o] += grad_out[o];
        const double* row = &l.w[o * l.in];
        double* grow = &gl.w[o * l.in];
        for (std::size_t i = 0; i < l.in; ++i) {
          grow[i] += grad_out[o] * in[i];
          grad_in[i] += grad_out[o] * row[i];
        }
      }
      grad_out = std::move(grad_in);
    }
    return grad_out;
  }

  Mlp zeros_like() const {
    Mlp z;
    for (const auto& l : layers) z.layers.emplace_back(l.in, l.out, l.relu);
    return z;
  }

  // Flat parameter views, used by the optimizer and gradient checks.
  std::vector<double> flatten() const {
    std::vector<double> out;
    for (const auto& l : layers) {
      out.insert(out.end(), l.w.begin(), l.w.end());
      out.insert(out.end(), l.b.begin(), l.b.end());
    }
    return out;
  }

  void unflatten(const std::vector<double>& flat) {
    std::size_t pos = 0;
    for (auto& l : layers) {
      for (auto& v : l.w) v = flat[pos++];
      for (auto& v : l.b) v = flat[pos++];
    }
    if (pos != flat.size()) throw GraceError("mlp: flat size mismatch");
  }
};

}  // namespace grace
