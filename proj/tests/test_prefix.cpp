#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>

#include "mrsim/prefix.hpp"

using namespace mrsim;

namespace {

std::vector<std::int64_t> scan_oracle(const std::vector<std::int64_t>& a) {
  std::vector<std::int64_t> b(a.size());
  std::int64_t s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) b[i] = s += a[i];
  return b;
}

// Independent height count: multiply until the tree covers n leaves.
std::uint64_t height_oracle(std::uint64_t n, std::uint64_t d) {
  std::uint64_t L = 1, cap = d;
  while (cap < n) cap *= d, ++L;
  return L;
}

}  // namespace

TEST_CASE("parent and child arithmetic") {
  TreeGeometry g{4, 3};
  CHECK(parent_pos({1, 5}, g) == TreePos{0, 1});
  CHECK(parent_pos({1, 0}, g) == TreePos{0, 0});
  CHECK(parent_pos({3, 129}, TreeGeometry{8, 4}) == TreePos{2, 16});
  CHECK_THROWS(parent_pos({0, 0}, g));
  auto kids = child_pos({1, 2}, g);
  REQUIRE(kids.size() == 4);
  CHECK(kids[0] == TreePos{2, 8});
  CHECK(kids[3] == TreePos{2, 11});
  for (auto& c : kids) CHECK(parent_pos(c, g) == TreePos{1, 2});
}

TEST_CASE("prefix sums small cases") {
  EngineConfig cfg;
  cfg.M = 4;
  auto r = prefix_sums(std::vector<std::int64_t>{1, 1, 1, 1}, cfg);
  CHECK(r.sums == std::vector<std::int64_t>{1, 2, 3, 4});
  CHECK(r.report.rounds == 2 * r.geometry.L);

  std::vector<std::int64_t> zeros(77, 0);
  CHECK(prefix_sums(zeros, cfg).sums == zeros);

  auto one = prefix_sums(std::vector<std::int64_t>{9}, cfg);
  CHECK(one.sums == std::vector<std::int64_t>{9});
  CHECK(one.report.rounds == 2);
}

TEST_CASE("prefix sums match a sequential scan") {
  Rng rng(7);
  std::vector<std::int64_t> a(1000);
  for (auto& x : a) x = rng.range(-100, 100);
  EngineConfig cfg;
  cfg.M = 16;
  auto r = prefix_sums(a, cfg);
  CHECK(r.sums == scan_oracle(a));
  CHECK(r.geometry.L == height_oracle(1000, 8));
  CHECK(r.report.rounds == 1 + (r.geometry.L - 1) + r.geometry.L);
  CHECK(r.report.violations.empty());
}

TEST_CASE("prefix round count for N=1024, M=64") {
  std::vector<std::int64_t> a(1024, 3);
  EngineConfig cfg;
  auto r = prefix_sums(a, cfg);
  CHECK(r.report.rounds == 2 * height_oracle(1024, 32));
  CHECK(r.sums.back() == 3072);
}

TEST_CASE("prefix overflow is reported") {
  std::vector<std::int64_t> a = {INT64_MAX, 1};
  CHECK_THROWS_AS(prefix_sums(a, EngineConfig{}), PrefixOverflow);
}

TEST_CASE("random indexing yields a permutation") {
  EngineConfig cfg;
  auto one = random_indexing(1, 1, cfg);
  CHECK(one.ranks == std::vector<std::uint64_t>{0});
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    auto r = random_indexing(5, 5, cfg);
    auto s = r.ranks;
    std::sort(s.begin(), s.end());
    CHECK(s == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
  }
  CHECK_THROWS(random_indexing(5, 4, cfg));
}

TEST_CASE("random indexing is close to uniform over permutations of 3") {
  EngineConfig cfg;
  cfg.M = 4;
  std::map<std::vector<std::uint64_t>, int> freq;
  const int trials = 3000;
  for (int s = 0; s < trials; ++s) {
    cfg.seed = 1000 + s;
    freq[random_indexing(3, 3, cfg).ranks]++;
  }
  CHECK(freq.size() == 6);
  for (auto& [perm, c] : freq) {
    CHECK(c > 400);
    CHECK(c < 600);
  }
}

TEST_CASE("random indexing N=1e4, M=64 over several seeds") {
  EngineConfig cfg;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    cfg.seed = seed;
    auto r = random_indexing(10000, 10000, cfg);
    std::vector<std::uint64_t> s = r.ranks;
    std::sort(s.begin(), s.end());
    std::vector<std::uint64_t> id(10000);
    std::iota(id.begin(), id.end(), 0);
    CHECK(s == id);
    CHECK(r.report.rounds == 2 * r.geometry.L);
  }
}
