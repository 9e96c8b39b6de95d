#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "mrsim/bruteforce.hpp"

using namespace mrsim;

namespace {

EngineConfig cfg_m(std::uint64_t M, std::uint64_t seed = 1) {
  EngineConfig c;
  c.M = M;
  c.seed = seed;
  return c;
}

// O(nm) double loop over (value, position) keys.
void loop_oracle(const std::vector<std::int64_t>& X, const std::vector<std::int64_t>& Y,
                 std::vector<std::uint64_t>& k, std::vector<std::uint64_t>& c) {
  k.assign(X.size(), 0);
  c.assign(Y.size(), 0);
  for (std::size_t i = 0; i < X.size(); ++i)
    for (std::size_t j = 0; j < Y.size(); ++j)
      if (std::pair(Y[j], j) < std::pair(X[i], i)) ++k[i], ++c[j];
}

std::vector<std::uint64_t> stable_ranks(const std::vector<std::int64_t>& X) {
  std::vector<std::size_t> order(X.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return X[a] < X[b]; });
  std::vector<std::uint64_t> r(X.size());
  for (std::size_t p = 0; p < order.size(); ++p) r[order[p]] = p;
  return r;
}

}  // namespace

TEST_CASE("replication examples") {
  auto one = replicate(1, 1, cfg_m(4));
  CHECK(one.report.rounds == 1);
  CHECK(one.populated == 1);

  auto four = replicate(4, 4, cfg_m(4));
  CHECK(four.report.rounds == 1);
  CHECK(four.complete);

  auto sixteen = replicate(16, 16, cfg_m(4));
  CHECK(replication_depth(16, 4) == 2);
  CHECK(sixteen.report.rounds == 2);
  CHECK(sixteen.complete);
  CHECK(sixteen.populated == 256);

  auto odd = replicate(3, 37, cfg_m(4));
  CHECK(odd.complete);
  CHECK(odd.report.rounds == 3);
  CHECK(odd.report.violations.empty());
}

TEST_CASE("multisearch examples") {
  std::vector<std::int64_t> X{5, 15, 25, 35}, Y{10, 20, 30};
  auto r = brute_multisearch(X, Y, cfg_m(4));
  CHECK(r.k == std::vector<std::uint64_t>{0, 1, 2, 3});
  CHECK(r.c == std::vector<std::uint64_t>{3, 2, 1});
  CHECK(leaf_counts(r.c) == std::vector<std::uint64_t>{1, 1, 1});

  std::vector<std::int64_t> s{7};
  auto t = brute_multisearch(s, s, cfg_m(4));
  CHECK(t.k == std::vector<std::uint64_t>{0});
}

TEST_CASE("random multisearch matches the double loop") {
  Rng rng(77);
  for (std::uint64_t M : {4, 8, 16}) {
    std::vector<std::int64_t> X(64), Y(32);
    for (auto& x : X) x = rng.range(0, 50);
    for (auto& y : Y) y = rng.range(0, 50);
    std::sort(Y.begin(), Y.end());
    auto r = brute_multisearch(X, Y, cfg_m(M));
    std::vector<std::uint64_t> k, c;
    loop_oracle(X, Y, k, c);
    CHECK(r.k == k);
    CHECK(r.c == c);
    CHECK(r.report.violations.empty());
    CHECK(r.report.rounds == brute_phase_rounds(64, 32, M));
    for (std::size_t j = 1; j < c.size(); ++j) CHECK(r.c[j - 1] >= r.c[j]);
    // Per-target difference equals the number of queries with rank exactly j + 1.
    auto lc = leaf_counts(r.c);
    for (std::size_t j = 0; j < lc.size(); ++j)
      CHECK(lc[j] == static_cast<std::uint64_t>(std::count(k.begin(), k.end(), j + 1)));
  }
}

TEST_CASE("brute sort examples and ties") {
  std::vector<std::int64_t> a{3, 1, 2};
  CHECK(brute_sort(a, cfg_m(4)).ranks == std::vector<std::uint64_t>{2, 0, 1});
  std::vector<std::int64_t> b{2, 2, 2};
  CHECK(brute_sort(b, cfg_m(4)).ranks == std::vector<std::uint64_t>{0, 1, 2});
}

TEST_CASE("brute sort of 256 values with M=16") {
  Rng rng(3);
  std::vector<std::int64_t> X(256);
  for (auto& x : X) x = rng.range(-100, 100);
  auto r = brute_sort(X, cfg_m(16));
  CHECK(r.ranks == stable_ranks(X));
  const double n2 = 256.0 * 256.0;
  const double C = static_cast<double>(r.report.total_communication);
  CHECK(C >= n2);
  CHECK(C <= 8 * n2 * 2);  // log_16 256 = 2
  CHECK(r.report.violations.empty());
  CHECK(r.report.rounds <= 3 * 2 * 2);
}

TEST_CASE("communication per grid cell stays within the window") {
  for (std::uint64_t M : {4, 8, 32}) {
    std::vector<std::int64_t> X(100);
    for (std::size_t i = 0; i < X.size(); ++i) X[i] = static_cast<std::int64_t>((i * 37) % 101);
    auto r = brute_sort(X, cfg_m(M));
    double ratio = static_cast<double>(r.report.total_communication) / (100.0 * 100.0);
    CHECK(ratio >= 1.0);
    CHECK(ratio <= 4.0 * static_cast<double>(ceil_log(M / 2, 100)));
    CHECK(r.ranks == stable_ranks(X));
  }
}
