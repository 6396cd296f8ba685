#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <set>

#include "emofed/rng.hpp"

using namespace emofed;

TEST_CASE("streams are deterministic") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next() == b.next());
  Rng c(43);
  REQUIRE(Rng(42).next() != c.next());
}

TEST_CASE("seed_mix separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 50; ++r)
    for (std::uint64_t c = 0; c < 50; ++c) seen.insert(seed_mix(7, r, c));
  REQUIRE(seen.size() == 2500);
  REQUIRE(seed_mix(1, 2, 3) != seed_mix(1, 3, 2));
}

TEST_CASE("below stays in range and covers it") {
  Rng rng(7);
  std::vector<int> hits(10, 0);
  for (int i = 0; i < 10000; ++i) {
    const auto v = rng.below(10);
    REQUIRE(v < 10);
    ++hits[v];
  }
  // crude uniformity: every bucket within 5 sigma of 1000
  for (int h : hits) REQUIRE(std::abs(h - 1000) < 150);
}

TEST_CASE("unit is in [0,1)") {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("shuffle permutes") {
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  const std::vector<int> orig = v;
  Rng rng(11);
  shuffle(v, rng);
  REQUIRE(v != orig);
  REQUIRE(std::is_permutation(v.begin(), v.end(), orig.begin()));

  std::vector<int> w = orig;
  Rng rng2(11);
  shuffle(w, rng2);
  REQUIRE(w == v);
}

TEST_CASE("sample_indices draws distinct ids") {
  Rng rng(5);
  const auto ids = sample_indices(100, 30, rng);
  REQUIRE(ids.size() == 30);
  REQUIRE(std::set<std::uint32_t>(ids.begin(), ids.end()).size() == 30);
  for (auto id : ids) REQUIRE(id < 100);
}

TEST_CASE("poisson has roughly the right mean") {
  Rng rng(9);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) sum += rng.poisson(12.0);
  REQUIRE(sum / n == Catch::Approx(12.0).margin(0.25));
}
