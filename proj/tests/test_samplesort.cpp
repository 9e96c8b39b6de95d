#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "mrsim/multisearch.hpp"
#include "mrsim/samplesort.hpp"

using namespace mrsim;

namespace {

std::vector<std::uint64_t> stable_ranks(const std::vector<std::int64_t>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<std::uint64_t> r(x.size());
  for (std::size_t p = 0; p < order.size(); ++p) r[order[p]] = p;
  return r;
}

std::vector<std::int64_t> random_values(std::size_t n, std::uint64_t seed, std::int64_t range) {
  std::mt19937_64 g(seed);
  std::uniform_int_distribution<std::int64_t> u(-range, range);
  std::vector<std::int64_t> v(n);
  for (auto& x : v) x = u(g);
  return v;
}

EngineConfig config(std::uint64_t M, std::uint64_t seed) {
  EngineConfig c;
  c.M = M;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("pivot count") {
  CHECK(pivot_count(0) == 1);
  CHECK(pivot_count(1) == 1);
  CHECK(pivot_count(2) == 2);
  CHECK(pivot_count(16) == 4);
  CHECK(pivot_count(17) == 5);
  CHECK(pivot_count(100000) == 317);
}

TEST_CASE("single item") {
  std::vector<std::int64_t> x{7};
  auto r = sample_sort(x, config(16, 1));
  CHECK(r.ranks == std::vector<std::uint64_t>{0});
  CHECK(r.depth == 0);
}

TEST_CASE("reversed input") {
  std::vector<std::int64_t> x(64);
  for (int i = 0; i < 64; ++i) x[i] = 63 - i;
  auto r = sample_sort(x, config(16, 3));
  for (int i = 0; i < 64; ++i) CHECK(r.ranks[i] == static_cast<std::uint64_t>(63 - i));
  CHECK(r.depth >= 1);
  CHECK(r.report.violations.empty());
}

TEST_CASE("random inputs with duplicates match a stable sort") {
  for (std::uint64_t M : {64, 128}) {
    for (std::uint64_t seed : {1, 2}) {
      auto x = random_values(3000, 100 + seed, 50);
      auto r = sample_sort(x, config(M, seed));
      CHECK(r.ranks == stable_ranks(x));
      for (auto& lv : r.levels) CHECK(lv.unsound == 0);
      for (auto& st : r.report.per_round) CHECK(st.max_in <= M);
    }
  }
}

TEST_CASE("ranks do not depend on the seed") {
  auto x = random_values(20000, 9, 1'000'000);
  auto a = sample_sort(x, config(256, 11));
  auto b = sample_sort(x, config(256, 12));
  CHECK(a.ranks == b.ranks);
  CHECK(a.ranks == stable_ranks(x));
}

TEST_CASE("oversized buckets trigger a resample") {
  auto x = random_values(2000, 5, 1'000'000);
  SampleSortOptions opt;
  opt.oversize_factor = 0.01;
  opt.max_resamples = 1;
  auto cfg = config(64, 4);
  cfg.round_limit = 100000;
  auto r = sample_sort(x, cfg, opt);
  CHECK(r.ranks == stable_ranks(x));
  REQUIRE(!r.levels.empty());
  CHECK(r.levels[0].resampled == 1);
  CHECK(r.levels[1].subproblems == 1);  // the same instance again
}

TEST_CASE("copy overload propagates at a small M") {
  auto x = random_values(3000, 7, 1000);
  CHECK_THROWS_AS(sample_sort(x, config(16, 1)), CopyOverload);
}
