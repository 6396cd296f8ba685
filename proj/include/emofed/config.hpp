#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>

#include <json.hpp>

#include "emofed/corpus.hpp"
#include "emofed/errors.hpp"
#include "emofed/fedsim.hpp"
#include "emofed/io.hpp"
#include "emofed/synth.hpp"

namespace emofed {

enum class Balancing { None, Resample, CostSensitive };

inline std::string balancing_name(Balancing b) {
  switch (b) {
    case Balancing::None: return "none";
    case Balancing::Resample: return "resample";
    case Balancing::CostSensitive: return "cost";
  }
  return "none";
}

inline Balancing balancing_from_name(const std::string& name) {
  if (name == "none") return Balancing::None;
  if (name == "resample") return Balancing::Resample;
  if (name == "cost") return Balancing::CostSensitive;
  throw ConfigError("unknown balancing mode: " + name + " (none|resample|cost)");
}

inline std::string algorithm_name(FedAlgorithm a) {
  switch (a) {
    case FedAlgorithm::FedAvg: return "fedavg";
    case FedAlgorithm::FedProx: return "fedprox";
    case FedAlgorithm::CausalFedGSD: return "causalfedgsd";
    case FedAlgorithm::CausalFedGSDMod: return "causalfedgsd-mod";
  }
  return "fedavg";
}

inline FedAlgorithm algorithm_from_name(const std::string& name) {
  if (name == "fedavg") return FedAlgorithm::FedAvg;
  if (name == "fedprox") return FedAlgorithm::FedProx;
  if (name == "causalfedgsd") return FedAlgorithm::CausalFedGSD;
  if (name == "causalfedgsd-mod") return FedAlgorithm::CausalFedGSDMod;
  throw ConfigError("unknown algorithm: " + name +
                    " (fedavg|fedprox|causalfedgsd|causalfedgsd-mod)");
}

namespace detail {

// Wraps a JSON object and rejects keys nobody asked for.
class StrictObject {
 public:
  StrictObject(const ojson& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    if (!j_.is_object()) throw ConfigError(ctx_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    known_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(ctx_ + "." + key + ": wrong type");
    }
  }

  void get(const char* key, std::optional<double>& out) {
    known_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    if (!j_.at(key).is_number()) throw ConfigError(ctx_ + "." + key + ": wrong type");
    out = j_.at(key).get<double>();
  }

  bool has(const char* key) {
    known_.insert(key);
    return j_.contains(key);
  }

  const ojson& at(const char* key) {
    known_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!known_.count(item.key()))
        throw ConfigError(ctx_ + ": unknown field \"" + item.key() + "\"");
    }
  }

 private:
  const ojson& j_;
  std::string ctx_;
  std::unordered_set<std::string> known_;
};

}  // namespace detail

// Everything an experiment needs, with every default materialized. The
// resolved form is echoed into each run directory so a run can be reproduced
// bit-for-bit from its own artifacts.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::uint32_t dim = 4096;
  Arch::Kind arch_kind = Arch::Kind::Linear;
  std::uint32_t hidden = 64;  // used when arch_kind == MLP
  NormalizeMode normalize_mode = NormalizeMode::Tokens;
  Balancing balancing = Balancing::None;

  // local / centralized optimizer settings
  double learning_rate = 1e-2;       // federated local SGD
  std::uint32_t batch_size = 8;
  std::uint32_t local_epochs = 1;
  double mu = 0.01;
  double central_learning_rate = 0.1;
  std::uint32_t central_epochs = 25;

  // federated protocol settings
  FedAlgorithm algorithm = FedAlgorithm::FedAvg;
  double client_fraction = 0.1;
  std::uint32_t rounds = 100;
  std::uint32_t n_clients = 100;
  PartitionMode partition = PartitionMode::IID;
  std::uint32_t bins_per_client = 2;
  double shared_fraction = 0.30;
  std::uint32_t warm_epochs = 5;
  double shared_sample_fraction = 0.05;
  std::optional<double> target_f1;
  std::uint32_t workers = 1;

  SyntheticSpec synth;

  static ExperimentConfig from_json(const ojson& j) {
    ExperimentConfig c;
    detail::StrictObject top(j, "config");
    top.get("seed", c.seed);
    top.get("dim", c.dim);
    if (top.has("arch")) {
      detail::StrictObject arch(top.at("arch"), "config.arch");
      std::string type = "linear";
      arch.get("type", type);
      if (type == "linear") c.arch_kind = Arch::Kind::Linear;
      else if (type == "mlp") c.arch_kind = Arch::Kind::MLP;
      else throw ConfigError("config.arch.type: linear|mlp");
      arch.get("hidden", c.hidden);
      arch.finish();
    }
    if (top.has("normalize_mode")) {
      const std::string mode = top.at("normalize_mode").get<std::string>();
      if (mode == "tokens") c.normalize_mode = NormalizeMode::Tokens;
      else if (mode == "plain") c.normalize_mode = NormalizeMode::Plain;
      else throw ConfigError("config.normalize_mode: tokens|plain");
    }
    if (top.has("balancing"))
      c.balancing = balancing_from_name(top.at("balancing").get<std::string>());
    if (top.has("train")) {
      detail::StrictObject train(top.at("train"), "config.train");
      train.get("learning_rate", c.learning_rate);
      train.get("batch_size", c.batch_size);
      train.get("local_epochs", c.local_epochs);
      train.get("mu", c.mu);
      train.finish();
    }
    if (top.has("central")) {
      detail::StrictObject central(top.at("central"), "config.central");
      central.get("epochs", c.central_epochs);
      central.get("learning_rate", c.central_learning_rate);
      central.finish();
    }
    if (top.has("fed")) {
      detail::StrictObject fed(top.at("fed"), "config.fed");
      if (fed.has("algorithm"))
        c.algorithm = algorithm_from_name(fed.at("algorithm").get<std::string>());
      fed.get("client_fraction", c.client_fraction);
      fed.get("rounds", c.rounds);
      fed.get("n_clients", c.n_clients);
      if (fed.has("partition")) {
        const std::string p = fed.at("partition").get<std::string>();
        if (p == "iid") c.partition = PartitionMode::IID;
        else if (p == "noniid") c.partition = PartitionMode::NonIID;
        else throw ConfigError("config.fed.partition: iid|noniid");
      }
      fed.get("bins_per_client", c.bins_per_client);
      fed.get("shared_fraction", c.shared_fraction);
      fed.get("warm_epochs", c.warm_epochs);
      fed.get("shared_sample_fraction", c.shared_sample_fraction);
      fed.get("target_f1", c.target_f1);
      fed.get("workers", c.workers);
      fed.finish();
    }
    if (top.has("synth")) {
      detail::StrictObject synth(top.at("synth"), "config.synth");
      synth.get("n_examples", c.synth.n_examples);
      synth.get("zipf_s", c.synth.zipf_s);
      synth.get("signature_vocab_per_class", c.synth.signature_vocab_per_class);
      synth.get("shared_vocab", c.synth.shared_vocab);
      synth.get("signal_ratio", c.synth.signal_ratio);
      synth.get("mean_length", c.synth.mean_length);
      synth.finish();
    }
    top.finish();
    c.validate();
    return c;
  }

  static ExperimentConfig from_file(const std::string& path) {
    ojson j = ojson::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + path);
    return from_json(j);
  }

  void validate() const {
    make_arch().validate();
    if (learning_rate < 0 || central_learning_rate < 0)
      throw ConfigError("learning rates must be non-negative");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (local_epochs == 0) throw ConfigError("local_epochs must be positive");
    if (mu < 0) throw ConfigError("mu must be non-negative");
    if (central_epochs == 0) throw ConfigError("central.epochs must be positive");
    synth.validate();
    make_fed_config().validate();
  }

  Arch make_arch() const {
    Arch a;
    a.kind = arch_kind;
    a.dim = dim;
    a.hidden = arch_kind == Arch::Kind::MLP ? hidden : 0;
    a.k = kNumCategories;
    return a;
  }

  TrainConfig make_train_config() const {
    TrainConfig t;
    t.learning_rate = learning_rate;
    t.batch_size = batch_size;
    t.local_epochs = local_epochs;
    t.mu = mu;
    return t;
  }

  FedConfig make_fed_config() const {
    FedConfig f;
    f.algorithm = algorithm;
    f.client_fraction = client_fraction;
    f.rounds = rounds;
    f.shared_fraction = shared_fraction;
    f.warm_epochs = warm_epochs;
    f.shared_sample_fraction = shared_sample_fraction;
    f.train = make_train_config();
    f.partition.mode = partition;
    f.partition.n_clients = n_clients;
    f.partition.bins_per_client = bins_per_client;
    f.partition.bins = n_clients * bins_per_client;
    f.arch = make_arch();
    f.seed = seed;
    f.target_f1 = target_f1;
    f.n_workers = workers;
    return f;
  }

  ojson to_json() const {
    ojson arch{{"type", arch_kind == Arch::Kind::Linear ? "linear" : "mlp"}};
    if (arch_kind == Arch::Kind::MLP) arch["hidden"] = hidden;
    return ojson{
        {"seed", seed},
        {"dim", dim},
        {"arch", arch},
        {"normalize_mode", normalize_mode == NormalizeMode::Tokens ? "tokens" : "plain"},
        {"balancing", balancing_name(balancing)},
        {"train",
         ojson{{"learning_rate", learning_rate},
               {"batch_size", batch_size},
               {"local_epochs", local_epochs},
               {"mu", mu}}},
        {"central",
         ojson{{"epochs", central_epochs}, {"learning_rate", central_learning_rate}}},
        {"fed",
         ojson{{"algorithm", algorithm_name(algorithm)},
               {"client_fraction", client_fraction},
               {"rounds", rounds},
               {"n_clients", n_clients},
               {"partition", partition == PartitionMode::IID ? "iid" : "noniid"},
               {"bins_per_client", bins_per_client},
               {"shared_fraction", shared_fraction},
               {"warm_epochs", warm_epochs},
               {"shared_sample_fraction", shared_sample_fraction},
               {"target_f1", target_f1 ? ojson(*target_f1) : ojson(nullptr)},
               {"workers", workers}}},
        {"synth",
         ojson{{"n_examples", synth.n_examples},
               {"zipf_s", synth.zipf_s},
               {"signature_vocab_per_class", synth.signature_vocab_per_class},
               {"shared_vocab", synth.shared_vocab},
               {"signal_ratio", synth.signal_ratio},
               {"mean_length", synth.mean_length}}},
    };
  }
};

}  // namespace emofed
