#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "emofed/dataset.hpp"
#include "emofed/errors.hpp"
#include "emofed/features.hpp"
#include "emofed/metrics.hpp"
#include "emofed/model.hpp"
#include "emofed/rng.hpp"

namespace emofed {

// One client's local dataset. n() is the aggregation weight n_i.
struct ClientShard {
  std::uint32_t client_id = 0;
  std::vector<Sample> examples;

  std::uint64_t n() const { return examples.size(); }
};

enum class PartitionMode { IID, NonIID };

struct PartitionPlan {
  PartitionMode mode = PartitionMode::IID;
  std::uint32_t n_clients = 100;
  std::uint32_t bins = 200;
  std::uint32_t bins_per_client = 2;

  void validate() const {
    if (n_clients == 0) throw ConfigError("partition: n_clients must be positive");
    if (mode == PartitionMode::NonIID &&
        bins != n_clients * static_cast<std::uint64_t>(bins_per_client))
      throw ConfigError("partition: bins must equal n_clients * bins_per_client");
  }
};

enum class FedAlgorithm { FedAvg, FedProx, CausalFedGSD, CausalFedGSDMod };

struct FedConfig {
  FedAlgorithm algorithm = FedAlgorithm::FedAvg;
  double client_fraction = 0.1;        // c
  std::uint32_t rounds = 100;          // R
  double shared_fraction = 0.30;       // s, CausalFedGSD variants
  std::uint32_t warm_epochs = 5;       // E0, modified variant
  double shared_sample_fraction = 0.05;  // alpha, baseline variant
  TrainConfig train;
  PartitionPlan partition;
  Arch arch;
  std::uint64_t seed = 0;
  std::optional<double> target_f1;     // validation weighted-F1 target
  std::uint32_t n_workers = 1;

  void validate() const {
    arch.validate();
    partition.validate();
    if (client_fraction <= 0.0 || client_fraction > 1.0)
      throw ConfigError("client_fraction must be in (0, 1]");
    if (client_fraction * partition.n_clients < 1.0 - 1e-9)
      throw ConfigError("client_fraction selects no clients");
    if (rounds == 0) throw ConfigError("rounds must be positive");
    const bool gsd =
        algorithm == FedAlgorithm::CausalFedGSD || algorithm == FedAlgorithm::CausalFedGSDMod;
    if (gsd && (shared_fraction <= 0.0 || shared_fraction >= 1.0))
      throw ConfigError("shared_fraction must be in (0, 1)");
    if (algorithm == FedAlgorithm::CausalFedGSD &&
        (shared_sample_fraction <= 0.0 || shared_sample_fraction > 1.0))
      throw ConfigError("shared_sample_fraction must be in (0, 1]");
    if (algorithm == FedAlgorithm::CausalFedGSDMod && warm_epochs == 0)
      throw ConfigError("warm_epochs must be positive");
    if (n_workers == 0) throw ConfigError("n_workers must be positive");
  }
};

// Per-round record. Only {round, clients, val, update_norm} cross the wire;
// local losses are in-memory diagnostics.
struct RoundLog {
  std::uint32_t round = 0;
  std::vector<std::uint32_t> clients;
  std::vector<double> local_losses;
  MetricsReport val;
  double update_norm = 0.0;
};

// The only thing a client hands back to the server: parameters and a count.
struct ClientUpdate {
  std::uint32_t client_id = 0;
  Params params;
  std::uint64_t n = 0;
};

namespace detail {

// ceil(f * n) guarded against representation error in f * n.
inline std::uint64_t ceil_fraction(double f, std::uint64_t n) {
  const double v = f * static_cast<double>(n) - 1e-9;
  return v <= 0.0 ? 0 : static_cast<std::uint64_t>(std::ceil(v));
}

inline constexpr std::uint64_t kTagPartition = 0x7a31;
inline constexpr std::uint64_t kTagShared = 0x7a32;
inline constexpr std::uint64_t kTagAttach = 0x7a33;
inline constexpr std::uint64_t kTagInit = 0x7a34;
inline constexpr std::uint64_t kTagWarm = 0x7a35;
inline constexpr std::uint64_t kTagSelect = 0x7a36;

inline std::map<int, std::vector<std::uint32_t>> indices_by_label(
    std::span<const Sample> data) {
  std::map<int, std::vector<std::uint32_t>> by_label;
  for (std::uint32_t i = 0; i < data.size(); ++i) by_label[data[i].label].push_back(i);
  return by_label;
}

}  // namespace detail

// Within each class, shuffle by seed and deal round-robin; the dealing
// position carries over between classes so shard sizes stay within one of
// each other.
inline std::vector<ClientShard> partition_iid(std::span<const Sample> train, std::uint32_t n_clients,
                                              std::uint64_t seed) {
  if (n_clients == 0) throw ConfigError("partition: n_clients must be positive");
  if (train.size() < n_clients) throw DataError("partition: fewer examples than clients");
  std::vector<ClientShard> shards(n_clients);
  for (std::uint32_t i = 0; i < n_clients; ++i) shards[i].client_id = i;
  std::uint64_t pos = 0;
  for (auto& [label, idx] : detail::indices_by_label(train)) {
    Rng rng(seed_mix(seed, detail::kTagPartition, static_cast<std::uint64_t>(label)));
    shuffle(idx, rng);
    for (std::uint32_t i : idx) shards[pos++ % n_clients].examples.push_back(train[i]);
  }
  return shards;
}

// Label-skewed shards: stable-sort by label, cut into `bins` contiguous
// near-equal bins (the first |train| mod bins get one extra), shuffle the
// bin order by seed, and hand each client bins_per_client consecutive
// positions of that order.
inline std::vector<ClientShard> partition_noniid(std::span<const Sample> train,
                                                 const PartitionPlan& plan, std::uint64_t seed) {
  plan.validate();
  if (train.size() < plan.bins) throw DataError("partition: fewer examples than bins");

  std::vector<std::uint32_t> idx(train.size());
  std::iota(idx.begin(), idx.end(), 0u);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return train[a].label < train[b].label; });

  std::vector<std::uint32_t> bin_order(plan.bins);
  std::iota(bin_order.begin(), bin_order.end(), 0u);
  Rng rng(seed_mix(seed, detail::kTagPartition));
  shuffle(bin_order, rng);

  const std::uint64_t base = train.size() / plan.bins;
  const std::uint64_t extra = train.size() % plan.bins;
  const auto bin_begin = [&](std::uint32_t b) {
    return b * base + std::min<std::uint64_t>(b, extra);
  };

  std::vector<ClientShard> shards(plan.n_clients);
  for (std::uint32_t i = 0; i < plan.n_clients; ++i) {
    shards[i].client_id = i;
    for (std::uint32_t j = 0; j < plan.bins_per_client; ++j) {
      const std::uint32_t bin = bin_order[i * plan.bins_per_client + j];
      const std::uint64_t lo = bin_begin(bin);
      const std::uint64_t hi = bin_begin(bin + 1);
      for (std::uint64_t p = lo; p < hi; ++p) shards[i].examples.push_back(train[idx[p]]);
    }
  }
  return shards;
}

// ceil(c*N) distinct ids, uniform without replacement, keyed by
// (seed, round_index), sorted ascending.
inline std::vector<std::uint32_t> select_clients(std::uint32_t n_clients, double c,
                                                 std::uint32_t round_index, std::uint64_t seed) {
  if (c <= 0.0 || c > 1.0) throw ConfigError("client fraction must be in (0, 1]");
  const auto m = static_cast<std::uint32_t>(detail::ceil_fraction(c, n_clients));
  Rng rng(seed_mix(seed, round_index));
  std::vector<std::uint32_t> ids = sample_indices(n_clients, m, rng);
  std::sort(ids.begin(), ids.end());
  return ids;
}

// Sample-count-weighted average of client parameters. Updates are summed in
// ascending client-id order so the reduction order is fixed no matter how
// the caller produced them.
inline Params aggregate(std::vector<ClientUpdate> updates) {
  if (updates.empty()) throw DataError("aggregate: no updates");
  std::sort(updates.begin(), updates.end(),
            [](const ClientUpdate& a, const ClientUpdate& b) { return a.client_id < b.client_id; });
  const Arch arch = updates.front().params.arch;
  std::uint64_t total = 0;
  for (const ClientUpdate& u : updates) {
    if (!(u.params.arch == arch)) throw DataError("aggregate: arch mismatch");
    total += u.n;
  }
  if (total == 0) throw DataError("aggregate: zero total weight");
  Params out;
  out.arch = arch;
  out.flat.assign(updates.front().params.flat.size(), 0.0);
  for (const ClientUpdate& u : updates) {
    const double w = static_cast<double>(u.n) / static_cast<double>(total);
    for (std::size_t i = 0; i < out.flat.size(); ++i) out.flat[i] += w * u.params.flat[i];
  }
  return out;
}

// Class-stratified reservation of ceil(s * n_c) examples per class.
inline std::pair<std::vector<Sample>, std::vector<Sample>> reserve_shared(
    std::span<const Sample> train, double s, std::uint64_t seed) {
  if (s <= 0.0 || s >= 1.0) throw ConfigError("shared_fraction must be in (0, 1)");
  std::vector<Sample> shared, remainder;
  for (auto& [label, idx] : detail::indices_by_label(train)) {
    Rng rng(seed_mix(seed, detail::kTagShared, static_cast<std::uint64_t>(label)));
    shuffle(idx, rng);
    const std::uint64_t take = detail::ceil_fraction(s, idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      (i < take ? shared : remainder).push_back(train[idx[i]]);
  }
  return {std::move(shared), std::move(remainder)};
}

// Baseline CausalFedGSD: each client is created with an independent random
// sample (without replacement) of the shared pool.
inline std::vector<ClientShard> attach_shared_samples(std::vector<ClientShard> shards,
                                                      std::span<const Sample> shared,
                                                      double alpha, std::uint64_t seed) {
  if (alpha <= 0.0 || alpha > 1.0) throw ConfigError("shared_sample_fraction must be in (0, 1]");
  const auto m = static_cast<std::uint32_t>(detail::ceil_fraction(alpha, shared.size()));
  for (ClientShard& shard : shards) {
    Rng rng(seed_mix(seed, detail::kTagAttach, shard.client_id));
    for (std::uint32_t i : sample_indices(static_cast<std::uint32_t>(shared.size()), m, rng))
      shard.examples.push_back(shared[i]);
  }
  return shards;
}

// Modified CausalFedGSD: the full shared pool pre-trains the round-0 global
// model instead of being shipped to clients.
inline Params warm_start(const Arch& arch, std::span<const Sample> shared,
                         std::uint32_t warm_epochs, const TrainConfig& train_cfg,
                         std::uint64_t seed) {
  if (shared.empty()) throw DataError("warm_start: empty shared pool");
  Params p = init(arch, seed);
  TrainConfig cfg = train_cfg;
  cfg.mu = 0.0;
  cfg.anchor = nullptr;
  cfg.local_epochs = warm_epochs;
  return sgd_train(p, shared, cfg, seed_mix(seed, detail::kTagWarm));
}

struct ExperimentResult {
  std::vector<RoundLog> rounds;
  MetricsReport test;
  std::optional<std::uint32_t> rounds_to_target;
  Params final_params;
};

using Featurizer = std::function<FeatureVec(const std::vector<std::string>&)>;

namespace detail {

inline std::vector<Sample> featurize_split(const std::vector<Example>& examples,
                                           const Featurizer& featurizer) {
  std::vector<Sample> out;
  out.reserve(examples.size());
  for (const Example& e : examples) out.push_back(Sample{featurizer(e.tokens), e.label});
  return out;
}

inline double l2_distance(std::span<const double> a, std::span<const double> b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

// Runs fn(i) for i in [0, n) on up to n_workers threads. Work items write
// only to their own slot, so scheduling cannot affect results.
inline void parallel_for(std::size_t n, std::uint32_t n_workers,
                         const std::function<void(std::size_t)>& fn) {
  if (n_workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const std::uint32_t spawn = static_cast<std::uint32_t>(
      std::min<std::size_t>(n_workers, n));
  pool.reserve(spawn);
  for (std::uint32_t w = 0; w < spawn; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace detail

// The full federated protocol: partition (after the CausalFedGSD reservation
// step when applicable), then R rounds of select -> local train -> aggregate
// -> validate, then a final test evaluation. Bit-reproducible for a fixed
// config at any worker count.
inline ExperimentResult run_experiment(const FedConfig& cfg, const SplitSet& data,
                                       const Featurizer& featurizer) {
  cfg.validate();
  const std::vector<Sample> train = detail::featurize_split(data.train, featurizer);
  const std::vector<Sample> val = detail::featurize_split(data.validation, featurizer);
  const std::vector<Sample> test = detail::featurize_split(data.test, featurizer);

  const bool gsd = cfg.algorithm == FedAlgorithm::CausalFedGSD ||
                   cfg.algorithm == FedAlgorithm::CausalFedGSDMod;

  std::vector<Sample> shared, remainder;
  std::span<const Sample> to_partition(train);
  if (gsd) {
    std::tie(shared, remainder) =
        reserve_shared(train, cfg.shared_fraction, seed_mix(cfg.seed, detail::kTagShared));
    to_partition = remainder;
  }

  std::vector<ClientShard> shards =
      cfg.partition.mode == PartitionMode::IID
          ? partition_iid(to_partition, cfg.partition.n_clients,
                          seed_mix(cfg.seed, detail::kTagPartition))
          : partition_noniid(to_partition, cfg.partition,
                             seed_mix(cfg.seed, detail::kTagPartition));

  if (cfg.algorithm == FedAlgorithm::CausalFedGSD)
    shards = attach_shared_samples(std::move(shards), shared, cfg.shared_sample_fraction,
                                   seed_mix(cfg.seed, detail::kTagAttach));

  Params global = cfg.algorithm == FedAlgorithm::CausalFedGSDMod
                      ? warm_start(cfg.arch, shared, cfg.warm_epochs, cfg.train,
                                   seed_mix(cfg.seed, detail::kTagInit))
                      : init(cfg.arch, seed_mix(cfg.seed, detail::kTagInit));

  ExperimentResult result;
  result.rounds.reserve(cfg.rounds);

  for (std::uint32_t round = 0; round < cfg.rounds; ++round) {
    const std::vector<std::uint32_t> selected =
        select_clients(cfg.partition.n_clients, cfg.client_fraction, round,
                       seed_mix(cfg.seed, detail::kTagSelect));

    std::vector<ClientUpdate> updates(selected.size());
    std::vector<double> local_losses(selected.size());
    detail::parallel_for(selected.size(), cfg.n_workers, [&](std::size_t pos) {
      const std::uint32_t id = selected[pos];
      const ClientShard& shard = shards[id];
      TrainConfig local = cfg.train;
      if (cfg.algorithm == FedAlgorithm::FedProx) {
        local.anchor = &global;
      } else {
        local.mu = 0.0;
        local.anchor = nullptr;
      }
      Params trained = sgd_train(global, shard.examples, local, seed_mix(cfg.seed, round, id));
      TrainConfig eval_cfg = local;
      eval_cfg.mu = 0.0;
      eval_cfg.anchor = nullptr;
      local_losses[pos] = loss(trained, shard.examples, eval_cfg);
      updates[pos] = ClientUpdate{id, std::move(trained), shard.n()};
    });

    Params next_global = aggregate(std::move(updates));
    const double norm = detail::l2_distance(next_global.flat, global.flat);
    if (!std::isfinite(norm))
      throw NumericError("non-finite global update at round " + std::to_string(round));

    RoundLog log;
    log.round = round;
    log.clients = selected;
    log.local_losses = std::move(local_losses);
    log.val = evaluate(next_global, val);
    log.update_norm = norm;
    if (cfg.target_f1 && !result.rounds_to_target && log.val.f1 >= *cfg.target_f1)
      result.rounds_to_target = round + 1;
    result.rounds.push_back(std::move(log));
    global = std::move(next_global);
  }

  result.test = evaluate(global, test);
  result.final_params = std::move(global);
  return result;
}

}  // namespace emofed
