#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "emofed/corpus.hpp"
#include "emofed/errors.hpp"
#include "emofed/rng.hpp"

namespace emofed {

// 80/10/10 partition of a corpus. Validation and test are never balanced or
// otherwise modified downstream.
struct SplitSet {
  std::vector<Example> train;
  std::vector<Example> validation;
  std::vector<Example> test;
  std::uint64_t split_seed = 0;
  bool by_source = true;
};

// Deterministic shuffle of units (examples, or source_id groups when
// by_source) keyed by seed, then a contiguous 80/10/10 cut.
inline SplitSet split(const std::vector<Example>& corpus, std::uint64_t seed, bool by_source) {
  if (corpus.empty()) throw DataError("empty corpus");

  std::vector<std::vector<std::uint32_t>> units;  // indices into corpus
  if (by_source) {
    std::unordered_map<std::string, std::size_t> group_of;
    for (std::uint32_t i = 0; i < corpus.size(); ++i) {
      auto [it, fresh] = group_of.emplace(corpus[i].source_id, units.size());
      if (fresh) units.emplace_back();
      units[it->second].push_back(i);
    }
  } else {
    units.reserve(corpus.size());
    for (std::uint32_t i = 0; i < corpus.size(); ++i) units.push_back({i});
  }

  Rng rng(seed);
  shuffle(units, rng);

  const std::size_t n = units.size();
  const std::size_t train_end = n * 8 / 10;
  const std::size_t val_end = n * 9 / 10;

  SplitSet out;
  out.split_seed = seed;
  out.by_source = by_source;
  for (std::size_t u = 0; u < n; ++u) {
    auto& dest = u < train_end ? out.train : u < val_end ? out.validation : out.test;
    for (std::uint32_t idx : units[u]) dest.push_back(corpus[idx]);
  }
  return out;
}

inline std::vector<std::int64_t> class_counts(const std::vector<Example>& examples, int k) {
  std::vector<std::int64_t> counts(k, 0);
  for (const Example& e : examples) {
    if (e.label < 0 || e.label >= k)
      throw DataError("label " + std::to_string(e.label) + " out of range for k=" +
                      std::to_string(k));
    ++counts[e.label];
  }
  return counts;
}

// Balances train to exactly floor(n/k) examples per class: majority classes
// are sampled without replacement, minority classes keep every original once
// and are topped up with replacement. Output order is shuffled by seed.
inline std::vector<Example> resample(const std::vector<Example>& train, std::uint64_t seed,
                                     int k = 10) {
  const std::int64_t target = static_cast<std::int64_t>(train.size()) / k;
  if (target < 1) throw DataError("resample: fewer examples than classes");

  std::vector<std::vector<std::uint32_t>> by_class(k);
  for (std::uint32_t i = 0; i < train.size(); ++i) {
    const int y = train[i].label;
    if (y < 0 || y >= k) throw DataError("resample: label out of range");
    by_class[y].push_back(i);
  }

  std::vector<Example> out;
  out.reserve(static_cast<std::size_t>(target) * k);
  for (int c = 0; c < k; ++c) {
    auto& members = by_class[c];
    if (members.empty())
      throw DataError("class has zero training examples: " + std::to_string(c));
    Rng rng(seed_mix(seed, 0x5e5a, static_cast<std::uint64_t>(c)));
    const std::int64_t n_c = static_cast<std::int64_t>(members.size());
    if (n_c >= target) {
      shuffle(members, rng);
      for (std::int64_t i = 0; i < target; ++i) out.push_back(train[members[i]]);
    } else {
      for (std::uint32_t idx : members) out.push_back(train[idx]);
      for (std::int64_t i = n_c; i < target; ++i)
        out.push_back(train[members[rng.below(members.size())]]);
    }
  }
  Rng rng(seed_mix(seed, 0x5e5b));
  shuffle(out, rng);
  return out;
}

// Unitless loss multipliers, w_c = n / (k * n_c). The mean-one normalization
// keeps the effective learning rate comparable across balancing modes.
struct ClassWeights {
  std::vector<double> w;
};

inline ClassWeights class_weights(const std::vector<Example>& train, int k = 10) {
  const auto counts = class_counts(train, k);
  ClassWeights out;
  out.w.resize(k);
  for (int c = 0; c < k; ++c) {
    if (counts[c] == 0)
      throw DataError("class has zero training examples: " + std::to_string(c));
    out.w[c] = static_cast<double>(train.size()) /
               (static_cast<double>(k) * static_cast<double>(counts[c]));
  }
  return out;
}

}  // namespace emofed
