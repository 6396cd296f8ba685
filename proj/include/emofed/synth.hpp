#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "emofed/corpus.hpp"
#include "emofed/errors.hpp"
#include "emofed/rng.hpp"

namespace emofed {

// Desk-scale stand-in for the long-tailed corpus: Zipf-distributed class
// frequencies, and token sequences mixing class-signature vocabulary with a
// shared pool.
struct SyntheticSpec {
  std::uint64_t n_examples = 20000;
  static constexpr int n_classes = 10;
  double zipf_s = 1.6;
  std::uint32_t signature_vocab_per_class = 50;
  std::uint32_t shared_vocab = 500;
  double signal_ratio = 0.7;
  double mean_length = 12.0;

  void validate() const {
    if (n_examples == 0) throw ConfigError("synth: n_examples must be positive");
    if (zipf_s < 0) throw ConfigError("synth: zipf_s must be non-negative");
    if (signature_vocab_per_class == 0) throw ConfigError("synth: signature vocab empty");
    if (shared_vocab == 0) throw ConfigError("synth: shared vocab empty");
    if (signal_ratio < 0 || signal_ratio > 1)
      throw ConfigError("synth: signal_ratio must be in [0,1]");
    if (mean_length <= 0) throw ConfigError("synth: mean_length must be positive");
  }
};

// Zipf pmf over ranks 1..n, p_r proportional to r^-s. Rank r maps to class
// label r-1, so label 0 is the head class.
inline std::vector<double> zipf_pmf(int n, double s) {
  std::vector<double> p(n);
  double norm = 0.0;
  for (int r = 0; r < n; ++r) {
    p[r] = std::pow(static_cast<double>(r + 1), -s);
    norm += p[r];
  }
  for (double& v : p) v /= norm;
  return p;
}

inline std::vector<Example> synth(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto pmf = zipf_pmf(SyntheticSpec::n_classes, spec.zipf_s);
  std::vector<double> cdf(pmf.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) cdf[i] = (acc += pmf[i]);

  std::vector<Example> out;
  out.reserve(spec.n_examples);
  for (std::uint64_t i = 0; i < spec.n_examples; ++i) {
    Rng rng(seed_mix(seed, i));
    const double u = rng.unit();
    int label = 0;
    while (label + 1 < SyntheticSpec::n_classes && u >= cdf[label]) ++label;

    const std::uint32_t len = std::max<std::uint32_t>(1, rng.poisson(spec.mean_length));
    std::vector<std::string> tokens;
    tokens.reserve(len);
    for (std::uint32_t t = 0; t < len; ++t) {
      if (rng.unit() < spec.signal_ratio) {
        tokens.push_back("c" + std::to_string(label) + "s" +
                         std::to_string(rng.below(spec.signature_vocab_per_class)));
      } else {
        tokens.push_back("w" + std::to_string(rng.below(spec.shared_vocab)));
      }
    }
    const std::string id = "syn-" + std::to_string(i);
    out.push_back(Example{id, id, std::move(tokens), label});
  }
  return out;
}

}  // namespace emofed
