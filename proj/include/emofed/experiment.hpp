#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "emofed/config.hpp"
#include "emofed/dataset.hpp"
#include "emofed/errors.hpp"
#include "emofed/fedsim.hpp"
#include "emofed/io.hpp"
#include "emofed/model.hpp"

namespace emofed {

namespace detail {
inline constexpr std::uint64_t kTagBalance = 0x6a01;
inline constexpr std::uint64_t kTagCentral = 0x6a02;
}  // namespace detail

inline Featurizer make_featurizer(std::uint32_t dim) {
  return [dim](const std::vector<std::string>& tokens) { return featurize(tokens, dim); };
}

// Applies the configured balancing: Resample replaces the training list,
// CostSensitive produces loss weights. Validation and test pass through
// untouched either way.
struct BalancedData {
  SplitSet data;
  std::vector<double> weights;  // empty unless cost-sensitive
  std::vector<std::int64_t> train_class_counts;
};

inline BalancedData apply_balancing(const SplitSet& splits, Balancing balancing,
                                    std::uint64_t seed) {
  BalancedData out;
  out.data = splits;
  if (balancing == Balancing::Resample) {
    out.data.train = resample(splits.train, seed_mix(seed, detail::kTagBalance),
                              kNumCategories);
  } else if (balancing == Balancing::CostSensitive) {
    out.weights = class_weights(splits.train, kNumCategories).w;
  }
  out.train_class_counts = class_counts(out.data.train, kNumCategories);
  return out;
}

struct CentralResult {
  Params params;
  MetricsReport val;
  MetricsReport test;
  std::vector<std::int64_t> train_class_counts;
};

// Reference centralized run: plain SGD on the (possibly balanced) training
// split, evaluated on the untouched validation and test splits.
inline CentralResult train_central(const ExperimentConfig& cfg, const SplitSet& splits) {
  const BalancedData balanced = apply_balancing(splits, cfg.balancing, cfg.seed);
  const Featurizer featurizer = make_featurizer(cfg.dim);

  std::vector<Sample> train, val, test;
  for (const Example& e : balanced.data.train) train.push_back({featurizer(e.tokens), e.label});
  for (const Example& e : balanced.data.validation) val.push_back({featurizer(e.tokens), e.label});
  for (const Example& e : balanced.data.test) test.push_back({featurizer(e.tokens), e.label});

  TrainConfig tc;
  tc.learning_rate = cfg.central_learning_rate;
  tc.batch_size = cfg.batch_size;
  tc.local_epochs = cfg.central_epochs;
  tc.mu = 0.0;
  tc.class_weights = balanced.weights;

  const Params start = init(cfg.make_arch(), seed_mix(cfg.seed, detail::kTagCentral));
  Params trained = sgd_train(start, train, tc, seed_mix(cfg.seed, detail::kTagCentral, 1));
  for (double v : trained.flat)
    if (!std::isfinite(v)) throw NumericError("non-finite parameters after centralized training");

  CentralResult result;
  result.val = evaluate(trained, val);
  result.test = evaluate(trained, test);
  result.params = std::move(trained);
  result.train_class_counts = balanced.train_class_counts;
  return result;
}

// One federated grid cell under the configured balancing mode.
inline ExperimentResult run_fed_cell(const ExperimentConfig& cfg, const SplitSet& splits) {
  const BalancedData balanced = apply_balancing(splits, cfg.balancing, cfg.seed);
  FedConfig fed = cfg.make_fed_config();
  fed.train.class_weights = balanced.weights;
  return run_experiment(fed, balanced.data, make_featurizer(cfg.dim));
}

inline std::string fed_cell_name(const ExperimentConfig& cfg) {
  const int pct = static_cast<int>(std::lround(cfg.client_fraction * 100.0));
  return algorithm_name(cfg.algorithm) + "_c" + std::to_string(pct) + "_" +
         (cfg.partition == PartitionMode::IID ? "iid" : "noniid") + "_" +
         balancing_name(cfg.balancing);
}

inline ojson fed_report_json(const ExperimentConfig& cfg, const ExperimentResult& result,
                             const std::vector<std::string>& notes) {
  ojson j{{"kind", "fed"}, {"config", cfg.to_json()},
          {"test_metrics", metrics_to_json(result.test)}};
  if (cfg.target_f1) {
    j["rounds_to_target"] =
        result.rounds_to_target ? ojson(*result.rounds_to_target) : ojson(nullptr);
  }
  if (!notes.empty()) j["notes"] = notes;
  return j;
}

inline ojson central_report_json(const ExperimentConfig& cfg, const CentralResult& result) {
  return ojson{{"kind", "central"},
               {"config", cfg.to_json()},
               {"val_metrics", metrics_to_json(result.val)},
               {"test_metrics", metrics_to_json(result.test)},
               {"train_class_counts", result.train_class_counts}};
}

}  // namespace emofed
