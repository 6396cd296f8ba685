#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "emofed/errors.hpp"

namespace emofed {

struct FeatureEntry {
  std::uint32_t index;
  std::uint32_t count;

  friend bool operator==(const FeatureEntry&, const FeatureEntry&) = default;
};

// Sparse hashed bag of words; entries sorted by index, indices unique.
struct FeatureVec {
  std::uint32_t dim = 0;
  std::vector<FeatureEntry> entries;

  friend bool operator==(const FeatureVec&, const FeatureVec&) = default;
};

// A featurized training instance.
struct Sample {
  FeatureVec x;
  int label = 0;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// FNV-1a of the UTF-8 token bytes, masked to dim (a power of two). The hash
// is fixed so feature indices are identical on every platform.
inline FeatureVec featurize(const std::vector<std::string>& tokens, std::uint32_t dim) {
  if (dim == 0 || (dim & (dim - 1)) != 0)
    throw ConfigError("feature dim must be a power of two, got " + std::to_string(dim));
  std::vector<std::uint32_t> indices;
  indices.reserve(tokens.size());
  for (const std::string& tok : tokens)
    indices.push_back(static_cast<std::uint32_t>(fnv1a64(tok) & (dim - 1)));
  std::sort(indices.begin(), indices.end());
  FeatureVec out;
  out.dim = dim;
  for (std::size_t i = 0; i < indices.size();) {
    std::size_t j = i;
    while (j < indices.size() && indices[j] == indices[i]) ++j;
    out.entries.push_back({indices[i], static_cast<std::uint32_t>(j - i)});
    i = j;
  }
  return out;
}

}  // namespace emofed
