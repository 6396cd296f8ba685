#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "emofed/model.hpp"
#include "emofed/rng.hpp"

using namespace emofed;

namespace {

FeatureVec fv(std::uint32_t dim, std::initializer_list<FeatureEntry> entries) {
  return FeatureVec{dim, entries};
}

std::vector<Sample> random_batch(Rng& rng, std::uint32_t dim, std::uint32_t k,
                                 std::size_t n) {
  std::vector<Sample> batch;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureVec x;
    x.dim = dim;
    std::uint32_t idx = 0;
    for (int e = 0; e < 3; ++e) {
      idx += 1 + static_cast<std::uint32_t>(rng.below(dim / 3));
      if (idx >= dim) break;
      x.entries.push_back({idx, 1 + static_cast<std::uint32_t>(rng.below(3))});
    }
    batch.push_back({std::move(x), static_cast<int>(rng.below(k))});
  }
  return batch;
}

// Central finite differences of loss(); the oracle the analytic gradient is
// held against.
GradVec fd_gradient(const Params& p, const std::vector<Sample>& batch,
                    const TrainConfig& cfg, double h = 1e-5) {
  GradVec g;
  g.flat.resize(p.flat.size());
  Params probe = p;
  for (std::size_t i = 0; i < p.flat.size(); ++i) {
    probe.flat[i] = p.flat[i] + h;
    const double up = loss(probe, batch, cfg);
    probe.flat[i] = p.flat[i] - h;
    const double down = loss(probe, batch, cfg);
    probe.flat[i] = p.flat[i];
    g.flat[i] = (up - down) / (2 * h);
  }
  return g;
}

double max_rel_error(const GradVec& a, const GradVec& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.flat.size(); ++i) {
    const double denom = std::max({std::abs(a.flat[i]), std::abs(b.flat[i]), 1e-6});
    worst = std::max(worst, std::abs(a.flat[i] - b.flat[i]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("parameter layout arithmetic") {
  Arch lin{Arch::Kind::Linear, 4, 0, 3};
  REQUIRE(lin.param_count() == 15);
  Arch mlp{Arch::Kind::MLP, 4, 5, 3};
  REQUIRE(mlp.param_count() == 43);
  REQUIRE(mlp.b1_offset() == 20);
  REQUIRE(mlp.w2_offset() == 25);
  REQUIRE(mlp.b2_offset() == 40);
}

TEST_CASE("init zeroes biases and is deterministic") {
  const Arch arch{Arch::Kind::MLP, 6, 4, 3};
  const Params a = init(arch, 42);
  const Params b = init(arch, 42);
  REQUIRE(a.flat == b.flat);
  for (std::size_t i = arch.b1_offset(); i < arch.w2_offset(); ++i) REQUIRE(a.flat[i] == 0.0);
  for (std::size_t i = arch.b2_offset(); i < a.flat.size(); ++i) REQUIRE(a.flat[i] == 0.0);
  const double bound = std::sqrt(6.0 / (6 + 4));
  for (std::size_t i = 0; i < arch.b1_offset(); ++i) {
    REQUIRE(a.flat[i] <= bound);
    REQUIRE(a.flat[i] >= -bound);
  }
  REQUIRE(init(arch, 43).flat != a.flat);
}

TEST_CASE("zero params give uniform probabilities") {
  Params p;
  p.arch = Arch{Arch::Kind::Linear, 8, 0, 10};
  p.flat.assign(p.arch.param_count(), 0.0);
  const auto probs = forward(p, fv(8, {{1, 2}, {5, 1}}));
  for (double v : probs) REQUIRE(v == Catch::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("forward probabilities form a simplex point") {
  Rng rng(31);
  const Arch arch{Arch::Kind::MLP, 12, 6, 4};
  const Params p = init(arch, 9);
  for (int trial = 0; trial < 30; ++trial) {
    const auto batch = random_batch(rng, 12, 4, 1);
    const auto probs = forward(p, batch[0].x);
    double sum = 0.0;
    for (double v : probs) {
      REQUIRE(v >= 0.0);
      sum += v;
    }
    REQUIRE(sum == Catch::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("forward hand case") {
  // k=2 over one feature: W = [[1],[0]], b = 0, x = {0:1}
  Params p;
  p.arch = Arch{Arch::Kind::Linear, 1, 0, 2};
  p.flat = {1.0, 0.0, 0.0, 0.0};
  const auto probs = forward(p, fv(1, {{0, 1}}));
  REQUIRE(probs[0] == Catch::Approx(0.7310585786300049).epsilon(1e-12));
  REQUIRE(probs[1] == Catch::Approx(0.2689414213699951).epsilon(1e-12));
}

TEST_CASE("forward rejects mismatched dims") {
  const Params p = init(Arch{Arch::Kind::Linear, 8, 0, 3}, 1);
  REQUIRE_THROWS_AS(forward(p, fv(16, {{0, 1}})), DataError);
}

TEST_CASE("argmax is invariant under a uniform logit shift") {
  Rng rng(17);
  const Arch arch{Arch::Kind::Linear, 10, 0, 5};
  Params p = init(arch, 23);
  const auto batch = random_batch(rng, 10, 5, 20);
  std::vector<int> before;
  for (const Sample& s : batch) before.push_back(predict(p, s.x));
  for (std::uint32_t j = 0; j < arch.k; ++j) p.flat[arch.b1_offset() + j] += 7.5;
  for (std::size_t i = 0; i < batch.size(); ++i) REQUIRE(predict(p, batch[i].x) == before[i]);
}

TEST_CASE("loss of uniform predictions is ln k") {
  Params p;
  p.arch = Arch{Arch::Kind::Linear, 4, 0, 10};
  p.flat.assign(p.arch.param_count(), 0.0);
  TrainConfig cfg;
  cfg.mu = 0.0;
  const std::vector<Sample> batch{{fv(4, {{0, 1}}), 3}};
  REQUIRE(loss(p, batch, cfg) == Catch::Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("near-perfect predictions give near-zero loss") {
  Params p;
  p.arch = Arch{Arch::Kind::Linear, 2, 0, 2};
  p.flat = {50.0, 0.0, 0.0, 50.0, 0.0, 0.0};  // huge correct-class margins
  TrainConfig cfg;
  cfg.mu = 0.0;
  const std::vector<Sample> batch{{fv(2, {{0, 1}}), 0}, {fv(2, {{1, 1}}), 1}};
  REQUIRE(loss(p, batch, cfg) < 1e-9);
}

TEST_CASE("proximal term vanishes at the anchor") {
  Rng rng(3);
  const Params p = init(Arch{Arch::Kind::Linear, 6, 0, 3}, 8);
  const auto batch = random_batch(rng, 6, 3, 5);
  TrainConfig plain;
  plain.mu = 0.0;
  TrainConfig prox;
  prox.mu = 0.01;
  prox.anchor = &p;
  REQUIRE(loss(p, batch, prox) == Catch::Approx(loss(p, batch, plain)).epsilon(1e-15));
  const GradVec g0 = grad(p, batch, plain);
  const GradVec g1 = grad(p, batch, prox);
  REQUIRE(g0.flat == g1.flat);
}

TEST_CASE("mu > 0 without an anchor is an error") {
  Rng rng(4);
  const Params p = init(Arch{Arch::Kind::Linear, 6, 0, 3}, 8);
  const auto batch = random_batch(rng, 6, 3, 2);
  TrainConfig cfg;
  cfg.mu = 0.5;
  REQUIRE_THROWS_AS(loss(p, batch, cfg), ConfigError);
  REQUIRE_THROWS_AS(grad(p, batch, cfg), ConfigError);
}

TEST_CASE("unit-weight mu=0 loss equals plain mean cross-entropy") {
  Rng rng(6);
  const Arch arch{Arch::Kind::Linear, 9, 0, 4};
  for (int trial = 0; trial < 20; ++trial) {
    const Params p = init(arch, 100 + trial);
    const auto batch = random_batch(rng, 9, 4, 6);
    TrainConfig cfg;
    cfg.mu = 0.0;
    double expect = 0.0;
    for (const Sample& s : batch) {
      const auto probs = forward(p, s.x);
      expect -= std::log(probs[s.label]);
    }
    expect /= static_cast<double>(batch.size());
    REQUIRE(loss(p, batch, cfg) == Catch::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("gradient doubles its proximal part when mu doubles") {
  Rng rng(12);
  const Arch arch{Arch::Kind::Linear, 6, 0, 3};
  const Params p = init(arch, 5);
  const Params anchor = init(arch, 6);
  const auto batch = random_batch(rng, 6, 3, 4);
  TrainConfig base;
  base.mu = 0.0;
  TrainConfig mu1 = base;
  mu1.mu = 1.0;
  mu1.anchor = &anchor;
  TrainConfig mu2 = base;
  mu2.mu = 2.0;
  mu2.anchor = &anchor;
  const GradVec g0 = grad(p, batch, base);
  const GradVec g1 = grad(p, batch, mu1);
  const GradVec g2 = grad(p, batch, mu2);
  for (std::size_t i = 0; i < g0.flat.size(); ++i) {
    const double d1 = g1.flat[i] - g0.flat[i];
    const double d2 = g2.flat[i] - g0.flat[i];
    REQUIRE(d2 == Catch::Approx(2.0 * d1).margin(1e-12));
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(2024);
  const std::vector<double> mus{0.0, 0.01, 1.0};
  int instance = 0;
  for (int trial = 0; trial < 10; ++trial) {
    for (const Arch& arch : {Arch{Arch::Kind::Linear, 7, 0, 3}, Arch{Arch::Kind::MLP, 7, 4, 3}}) {
      const Params p = init(arch, 500 + trial);
      const Params anchor = init(arch, 900 + trial);
      const auto batch = random_batch(rng, 7, 3, 4);
      TrainConfig cfg;
      cfg.mu = mus[instance % mus.size()];
      if (cfg.mu > 0) cfg.anchor = &anchor;
      if (instance % 2 == 0) {
        cfg.class_weights = {0.5, 2.0, 1.25};
      }
      ++instance;
      const GradVec analytic = grad(p, batch, cfg);
      const GradVec numeric = fd_gradient(p, batch, cfg);
      REQUIRE(max_rel_error(analytic, numeric) < 1e-4);
    }
  }
}

TEST_CASE("sgd with lr=0 is the identity") {
  Rng rng(50);
  const Params p = init(Arch{Arch::Kind::Linear, 8, 0, 3}, 4);
  const auto shard = random_batch(rng, 8, 3, 10);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.mu = 0.0;
  cfg.local_epochs = 3;
  REQUIRE(sgd_train(p, shard, cfg, 1).flat == p.flat);
}

TEST_CASE("one sgd step equals one explicit gradient step") {
  Rng rng(51);
  const Params p = init(Arch{Arch::Kind::Linear, 8, 0, 3}, 4);
  const auto shard = random_batch(rng, 8, 3, 1);
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.mu = 0.0;
  cfg.batch_size = 8;
  cfg.local_epochs = 1;
  const GradVec g = grad(p, shard, cfg);
  const Params trained = sgd_train(p, shard, cfg, 7);
  for (std::size_t i = 0; i < p.flat.size(); ++i)
    REQUIRE(trained.flat[i] == Catch::Approx(p.flat[i] - 0.1 * g.flat[i]).margin(1e-15));
}

TEST_CASE("sgd is bit-deterministic and leaves its input untouched") {
  Rng rng(52);
  const Params p = init(Arch{Arch::Kind::MLP, 8, 5, 3}, 4);
  const std::vector<double> before = p.flat;
  const auto shard = random_batch(rng, 8, 3, 23);
  TrainConfig cfg;
  cfg.local_epochs = 2;
  cfg.mu = 0.0;
  const Params a = sgd_train(p, shard, cfg, 99);
  const Params b = sgd_train(p, shard, cfg, 99);
  REQUIRE(a.flat == b.flat);
  REQUIRE(p.flat == before);
  REQUIRE(a.flat != p.flat);
}

TEST_CASE("sgd drives the loss down on a separable toy set") {
  // class = sign feature: examples of class c contain feature c
  std::vector<Sample> shard;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 8; ++i) shard.push_back({fv(4, {{static_cast<std::uint32_t>(c), 1}}), c});
  TrainConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.mu = 0.0;
  cfg.local_epochs = 100;
  const Params start = init(Arch{Arch::Kind::Linear, 4, 0, 3}, 11);
  const Params trained = sgd_train(start, shard, cfg, 12);
  TrainConfig eval;
  eval.mu = 0.0;
  REQUIRE(loss(trained, shard, eval) < loss(start, shard, eval));
  REQUIRE(loss(trained, shard, eval) < 0.1);
  REQUIRE(evaluate(trained, shard).accuracy == 1.0);
}

TEST_CASE("incomplete final minibatch is kept") {
  // 5 examples, batch 4: the 5th example still contributes an update
  std::vector<Sample> shard;
  for (int i = 0; i < 5; ++i) shard.push_back({fv(4, {{0, 1}}), 0});
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.batch_size = 4;
  cfg.mu = 0.0;
  Params p;
  p.arch = Arch{Arch::Kind::Linear, 4, 0, 2};
  p.flat.assign(p.arch.param_count(), 0.0);
  const Params one = sgd_train(p, std::vector<Sample>(shard.begin(), shard.begin() + 4), cfg, 3);
  const Params all = sgd_train(p, shard, cfg, 3);
  REQUIRE(one.flat != all.flat);
}
