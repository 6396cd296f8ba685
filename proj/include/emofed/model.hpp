#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "emofed/errors.hpp"
#include "emofed/features.hpp"
#include "emofed/metrics.hpp"
#include "emofed/rng.hpp"

namespace emofed {

// Reference classifier shapes: softmax regression, or one hidden ReLU layer.
struct Arch {
  enum class Kind { Linear, MLP };
  Kind kind = Kind::Linear;
  std::uint32_t dim = 4096;
  std::uint32_t hidden = 0;
  std::uint32_t k = 10;

  friend bool operator==(const Arch&, const Arch&) = default;

  std::uint32_t layer1_rows() const { return kind == Kind::Linear ? k : hidden; }
  std::size_t w1_offset() const { return 0; }
  std::size_t b1_offset() const { return static_cast<std::size_t>(layer1_rows()) * dim; }
  std::size_t w2_offset() const { return b1_offset() + layer1_rows(); }
  std::size_t b2_offset() const {
    return w2_offset() + static_cast<std::size_t>(k) * hidden;
  }
  std::size_t param_count() const {
    return kind == Kind::Linear ? b1_offset() + k : b2_offset() + k;
  }

  void validate() const {
    if (dim == 0 || k == 0) throw ConfigError("arch: dim and k must be positive");
    if (kind == Kind::MLP && hidden == 0) throw ConfigError("arch: MLP needs hidden > 0");
  }
};

// Flattened parameter vector, layout [W1 row-major, b1, W2 row-major, b2].
struct Params {
  Arch arch;
  std::vector<double> flat;
};

struct GradVec {
  std::vector<double> flat;
};

struct TrainConfig {
  double learning_rate = 1e-2;
  std::uint32_t batch_size = 8;
  std::uint32_t local_epochs = 1;
  double mu = 0.01;                    // proximal coefficient
  std::vector<double> class_weights;   // empty = unit weights
  const Params* anchor = nullptr;      // global model w^t; required when mu > 0
};

// Glorot-style uniform init: weights ~ U(-a, a) with a = sqrt(6/(fan_in +
// fan_out)) per layer, biases zero.
inline Params init(const Arch& arch, std::uint64_t seed) {
  arch.validate();
  Params p;
  p.arch = arch;
  p.flat.assign(arch.param_count(), 0.0);
  Rng rng(seed);
  const auto fill = [&](std::size_t offset, std::size_t count, double fan_in, double fan_out) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t i = 0; i < count; ++i) p.flat[offset + i] = a * (2.0 * rng.unit() - 1.0);
  };
  if (arch.kind == Arch::Kind::Linear) {
    fill(arch.w1_offset(), static_cast<std::size_t>(arch.k) * arch.dim, arch.dim, arch.k);
  } else {
    fill(arch.w1_offset(), static_cast<std::size_t>(arch.hidden) * arch.dim, arch.dim,
         arch.hidden);
    fill(arch.w2_offset(), static_cast<std::size_t>(arch.k) * arch.hidden, arch.hidden,
         arch.k);
  }
  return p;
}

namespace detail {

// Scratch buffers reused across samples and batches.
struct ModelWorkspace {
  std::vector<double> hidden;
  std::vector<double> logits;
  std::vector<double> probs;
  std::vector<double> dz;
  std::vector<double> dh;
};

inline void check_input(const Params& p, const FeatureVec& x) {
  if (x.dim != p.arch.dim)
    throw DataError("feature dim " + std::to_string(x.dim) + " does not match model dim " +
                    std::to_string(p.arch.dim));
}

// Fills ws.hidden (MLP only) and ws.logits.
inline void forward_logits(const Params& p, const FeatureVec& x, ModelWorkspace& ws) {
  const Arch& a = p.arch;
  ws.logits.assign(a.k, 0.0);
  if (a.kind == Arch::Kind::Linear) {
    for (std::uint32_t j = 0; j < a.k; ++j) {
      double z = p.flat[a.b1_offset() + j];
      const double* row = p.flat.data() + static_cast<std::size_t>(j) * a.dim;
      for (const FeatureEntry& e : x.entries) z += row[e.index] * e.count;
      ws.logits[j] = z;
    }
    return;
  }
  ws.hidden.assign(a.hidden, 0.0);
  for (std::uint32_t u = 0; u < a.hidden; ++u) {
    double z = p.flat[a.b1_offset() + u];
    const double* row = p.flat.data() + static_cast<std::size_t>(u) * a.dim;
    for (const FeatureEntry& e : x.entries) z += row[e.index] * e.count;
    ws.hidden[u] = z > 0.0 ? z : 0.0;  // ReLU
  }
  const double* w2 = p.flat.data() + a.w2_offset();
  for (std::uint32_t j = 0; j < a.k; ++j) {
    double z = p.flat[a.b2_offset() + j];
    const double* row = w2 + static_cast<std::size_t>(j) * a.hidden;
    for (std::uint32_t u = 0; u < a.hidden; ++u) z += row[u] * ws.hidden[u];
    ws.logits[j] = z;
  }
}

inline double log_sum_exp(const std::vector<double>& z) {
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

inline double sample_weight(const TrainConfig& cfg, const Arch& arch, int label) {
  if (label < 0 || static_cast<std::uint32_t>(label) >= arch.k)
    throw DataError("label out of range: " + std::to_string(label));
  if (cfg.class_weights.empty()) return 1.0;
  if (cfg.class_weights.size() != arch.k)
    throw ConfigError("class_weights size does not match k");
  return cfg.class_weights[label];
}

inline void check_prox(const TrainConfig& cfg, const Params& p) {
  if (cfg.mu > 0.0) {
    if (cfg.anchor == nullptr) throw ConfigError("mu > 0 requires an anchor");
    if (cfg.anchor->flat.size() != p.flat.size())
      throw ConfigError("anchor size does not match params");
  }
}

inline double loss_indexed(const Params& p, std::span<const Sample> shard,
                           std::span<const std::uint32_t> idx, const TrainConfig& cfg,
                           ModelWorkspace& ws) {
  check_prox(cfg, p);
  double total = 0.0;
  for (std::uint32_t i : idx) {
    const Sample& s = shard[i];
    check_input(p, s.x);
    forward_logits(p, s.x, ws);
    const double w = sample_weight(cfg, p.arch, s.label);
    total += w * (log_sum_exp(ws.logits) - ws.logits[s.label]);
  }
  total /= static_cast<double>(idx.size());
  if (cfg.mu > 0.0) {
    double sq = 0.0;
    for (std::size_t i = 0; i < p.flat.size(); ++i) {
      const double d = p.flat[i] - cfg.anchor->flat[i];
      sq += d * d;
    }
    total += 0.5 * cfg.mu * sq;
  }
  return total;
}

// Analytic gradient of loss_indexed, accumulated into g (pre-zeroed).
inline void grad_indexed(const Params& p, std::span<const Sample> shard,
                         std::span<const std::uint32_t> idx, const TrainConfig& cfg,
                         ModelWorkspace& ws, std::vector<double>& g) {
  check_prox(cfg, p);
  const Arch& a = p.arch;
  const double inv_batch = 1.0 / static_cast<double>(idx.size());
  for (std::uint32_t i : idx) {
    const Sample& s = shard[i];
    check_input(p, s.x);
    forward_logits(p, s.x, ws);
    const double lse = log_sum_exp(ws.logits);
    ws.probs.resize(a.k);
    for (std::uint32_t j = 0; j < a.k; ++j) ws.probs[j] = std::exp(ws.logits[j] - lse);
    const double coef = sample_weight(cfg, a, s.label) * inv_batch;
    ws.dz.resize(a.k);
    for (std::uint32_t j = 0; j < a.k; ++j)
      ws.dz[j] = (ws.probs[j] - (static_cast<int>(j) == s.label ? 1.0 : 0.0)) * coef;

    if (a.kind == Arch::Kind::Linear) {
      for (std::uint32_t j = 0; j < a.k; ++j) {
        const double dz = ws.dz[j];
        if (dz == 0.0) continue;
        g[a.b1_offset() + j] += dz;
        double* row = g.data() + static_cast<std::size_t>(j) * a.dim;
        for (const FeatureEntry& e : s.x.entries) row[e.index] += dz * e.count;
      }
      continue;
    }
    const double* w2 = p.flat.data() + a.w2_offset();
    ws.dh.assign(a.hidden, 0.0);
    for (std::uint32_t j = 0; j < a.k; ++j) {
      const double dz = ws.dz[j];
      g[a.b2_offset() + j] += dz;
      double* grow = g.data() + a.w2_offset() + static_cast<std::size_t>(j) * a.hidden;
      const double* wrow = w2 + static_cast<std::size_t>(j) * a.hidden;
      for (std::uint32_t u = 0; u < a.hidden; ++u) {
        grow[u] += dz * ws.hidden[u];
        ws.dh[u] += dz * wrow[u];
      }
    }
    for (std::uint32_t u = 0; u < a.hidden; ++u) {
      if (ws.hidden[u] <= 0.0) continue;  // ReLU gate
      const double dz1 = ws.dh[u];
      g[a.b1_offset() + u] += dz1;
      double* row = g.data() + static_cast<std::size_t>(u) * a.dim;
      for (const FeatureEntry& e : s.x.entries) row[e.index] += dz1 * e.count;
    }
  }
  if (cfg.mu > 0.0) {
    for (std::size_t i = 0; i < p.flat.size(); ++i)
      g[i] += cfg.mu * (p.flat[i] - cfg.anchor->flat[i]);
  }
}

}  // namespace detail

// Class probabilities (softmax over logits, max-subtracted for stability).
inline std::vector<double> forward(const Params& p, const FeatureVec& x) {
  detail::check_input(p, x);
  detail::ModelWorkspace ws;
  detail::forward_logits(p, x, ws);
  const double lse = detail::log_sum_exp(ws.logits);
  std::vector<double> probs(p.arch.k);
  for (std::uint32_t j = 0; j < p.arch.k; ++j) probs[j] = std::exp(ws.logits[j] - lse);
  return probs;
}

// Mean class-weighted cross-entropy plus (mu/2) * ||flat - anchor||^2.
inline double loss(const Params& p, std::span<const Sample> batch, const TrainConfig& cfg) {
  if (batch.empty()) throw DataError("loss: empty batch");
  std::vector<std::uint32_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0u);
  detail::ModelWorkspace ws;
  return detail::loss_indexed(p, batch, idx, cfg, ws);
}

inline GradVec grad(const Params& p, std::span<const Sample> batch, const TrainConfig& cfg) {
  if (batch.empty()) throw DataError("grad: empty batch");
  std::vector<std::uint32_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0u);
  detail::ModelWorkspace ws;
  GradVec g;
  g.flat.assign(p.flat.size(), 0.0);
  detail::grad_indexed(p, batch, idx, cfg, ws, g.flat);
  return g;
}

// Plain minibatch SGD: local_epochs passes, each epoch reshuffled by
// (seed, epoch), sequential minibatches with the last short batch kept.
// Returns new Params; the input is untouched.
inline Params sgd_train(const Params& params, std::span<const Sample> shard,
                        const TrainConfig& cfg, std::uint64_t seed) {
  if (shard.empty()) throw DataError("sgd_train: empty shard");
  if (cfg.batch_size == 0) throw ConfigError("sgd_train: batch_size must be positive");
  Params cur = params;
  std::vector<std::uint32_t> order(shard.size());
  detail::ModelWorkspace ws;
  std::vector<double> g(cur.flat.size());
  for (std::uint32_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0u);
    Rng rng(seed_mix(seed, epoch));
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min<std::size_t>(cfg.batch_size, order.size() - start);
      std::fill(g.begin(), g.end(), 0.0);
      detail::grad_indexed(cur, shard, std::span(order).subspan(start, len), cfg, ws, g);
      for (std::size_t i = 0; i < cur.flat.size(); ++i)
        cur.flat[i] -= cfg.learning_rate * g[i];
    }
  }
  return cur;
}

inline int predict(const Params& p, const FeatureVec& x) {
  const auto probs = forward(p, x);
  int best = 0;
  for (std::uint32_t j = 1; j < p.arch.k; ++j)
    if (probs[j] > probs[best]) best = static_cast<int>(j);
  return best;
}

inline MetricsReport evaluate(const Params& p, std::span<const Sample> data) {
  std::vector<int> preds, truths;
  preds.reserve(data.size());
  truths.reserve(data.size());
  for (const Sample& s : data) {
    preds.push_back(predict(p, s.x));
    truths.push_back(s.label);
  }
  return report(confusion(preds, truths, static_cast<int>(p.arch.k)));
}

}  // namespace emofed
