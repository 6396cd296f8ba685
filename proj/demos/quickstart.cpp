// Minimal library walkthrough: synthesize a long-tail corpus, split it,
// train the centralized reference, then run one federated experiment and
// compare. Build target: quickstart.

#include <cstdio>

#include "emofed/experiment.hpp"
#include "emofed/synth.hpp"

using namespace emofed;

int main() {
  SyntheticSpec spec;
  spec.n_examples = 4000;
  const SplitSet splits = split(synth(spec, 1), 2, false);

  ExperimentConfig cfg;
  cfg.seed = 3;
  cfg.dim = 1024;
  cfg.central_epochs = 10;
  cfg.learning_rate = 0.05;
  cfg.n_clients = 20;
  cfg.client_fraction = 0.5;
  cfg.rounds = 30;

  const CentralResult central = train_central(cfg, splits);
  std::printf("centralized      P %.4f  R %.4f  F1 %.4f\n", central.test.precision,
              central.test.recall, central.test.f1);

  for (FedAlgorithm algo : {FedAlgorithm::FedProx, FedAlgorithm::CausalFedGSDMod}) {
    cfg.algorithm = algo;
    const ExperimentResult result = run_fed_cell(cfg, splits);
    std::printf("%-16s P %.4f  R %.4f  F1 %.4f  (round-1 val F1 %.4f)\n",
                algorithm_name(algo).c_str(), result.test.precision, result.test.recall,
                result.test.f1, result.rounds.front().val.f1);
  }
  return 0;
}
