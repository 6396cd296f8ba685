#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace emofed {

// splitmix64 finalizer; also used as the hash step of seed_mix.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t seed_mix(std::uint64_t a) { return a; }

// Derives a child seed from a parent seed and one or more stream tags.
// Platform-independent; every seeded operation in the library keys its
// randomness through this.
template <typename... Rest>
constexpr std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b, Rest... rest) {
  return seed_mix(mix64(a + 0x9e3779b97f4a7c15ULL + mix64(b)), rest...);
}

// splitmix64 stream. Deliberately not <random>: identical output on every
// platform and toolchain is part of the reproducibility contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    return mix64(z);
  }

  // Unbiased integer in [0, n) via rejection sampling.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  // [0, 1) with 53 bits of precision.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Knuth's product-of-uniforms method; fine for the small means used here.
  std::uint32_t poisson(double mean) {
    const double limit = std::exp(-mean);
    std::uint32_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= unit();
    } while (p > limit);
    return k - 1;
  }

 private:
  std::uint64_t state_;
};

// Fisher-Yates; the loop is spelled out so shuffles are bit-stable across
// standard libraries.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
inline std::vector<std::uint32_t> sample_indices(std::uint32_t n, std::uint32_t k, Rng& rng) {
  std::vector<std::uint32_t> pool(n);
  for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
  for (std::uint32_t i = 0; i < k; ++i) {
    const std::uint32_t j = i + static_cast<std::uint32_t>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace emofed
