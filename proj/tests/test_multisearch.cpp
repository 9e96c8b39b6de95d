#include <doctest.h>

#include <algorithm>

#include "mrsim/multisearch.hpp"

using namespace mrsim;

namespace {

EngineConfig cfg_m(std::uint64_t M, std::uint64_t seed = 1) {
  EngineConfig c;
  c.M = M;
  c.seed = seed;
  return c;
}

std::vector<std::uint64_t> bsearch_oracle(const std::vector<std::int64_t>& P, const std::vector<std::int64_t>& Q) {
  std::vector<std::uint64_t> r;
  for (auto q : Q) r.push_back(std::lower_bound(P.begin(), P.end(), q) - P.begin());
  return r;
}

}  // namespace

TEST_CASE("DAG replication counts") {
  std::vector<std::int64_t> four{1, 2, 3, 4};
  auto a = build_search_dag(std::span<const std::int64_t>(four), 8, 4);
  CHECK(a.levels == 1);
  CHECK(a.copies == std::vector<std::uint64_t>{2});

  std::vector<std::int64_t> sixteen(16);
  for (int i = 0; i < 16; ++i) sixteen[i] = i * 10;
  auto b = build_search_dag(std::span<const std::int64_t>(sixteen), 8, 256);
  CHECK(b.levels == 2);
  CHECK(b.copies == std::vector<std::uint64_t>{128, 32});
  // Complete tree: every leaf-level node covers exactly d pivots.
  CHECK(b.nodes_on_level(1) == 4);
  for (std::uint64_t k = 0; k < 4; ++k) CHECK(b.leaf_rank(k, Key{1000, 0}) == (k + 1) * 4);

  std::vector<std::int64_t> bad{3, 3};
  CHECK_THROWS_AS(build_search_dag(std::span<const std::int64_t>(bad), 8, 1), UnsortedPivots);
  std::vector<std::int64_t> bad2{5, 1};
  CHECK_THROWS_AS(build_search_dag(std::span<const std::int64_t>(bad2), 8, 1), UnsortedPivots);
}

TEST_CASE("small multi-search") {
  std::vector<std::int64_t> P{10, 20, 30}, Q{5, 15, 25, 35};
  auto r = multi_search(P, Q, cfg_m(8));
  CHECK(r.ranks == std::vector<std::uint64_t>{0, 1, 2, 3});

  std::vector<std::int64_t> none;
  auto e = multi_search(P, none, cfg_m(8));
  CHECK(e.ranks.empty());
  CHECK(e.report.rounds == 0);

  std::vector<std::int64_t> dup{20, 20, 20, 10, 31, 30};
  auto d = multi_search(P, dup, cfg_m(8));
  CHECK(d.ranks == std::vector<std::uint64_t>{1, 1, 1, 0, 3, 2});
}

TEST_CASE("multi-search across budgets matches binary search") {
  Rng rng(9);
  for (std::uint64_t M : {64, 128, 256}) {
    std::vector<std::int64_t> P(300), Q(2000);
    for (std::size_t i = 0; i < P.size(); ++i) P[i] = static_cast<std::int64_t>(i) * 7 + 3;
    for (auto& q : Q) q = rng.range(-10, 2200);
    auto r = multi_search(P, Q, cfg_m(M, M));
    CHECK(r.ranks == bsearch_oracle(P, Q));
    CHECK(r.report.violations.empty());
    CHECK(r.search_rounds == r.batches + r.dag.levels);
    CHECK(r.dag_nodes <= 8 * (P.size() + r.dag.batch_size));
  }
}

TEST_CASE("tiny budgets report copy overload") {
  std::vector<std::int64_t> P(300), Q(2000);
  for (std::size_t i = 0; i < P.size(); ++i) P[i] = static_cast<std::int64_t>(i) * 7 + 3;
  for (std::size_t i = 0; i < Q.size(); ++i) Q[i] = static_cast<std::int64_t>((i * 7919) % 2200);
  CHECK_THROWS_AS(multi_search(P, Q, cfg_m(8)), CopyOverload);
}

TEST_CASE("answers do not depend on the seed") {
  std::vector<std::int64_t> P(1024), Q(8192);
  for (std::size_t i = 0; i < P.size(); ++i) P[i] = static_cast<std::int64_t>(i) * 1000;
  Rng rng(4);
  for (auto& q : Q) q = rng.range(-5000, 1'030'000);
  auto oracle = bsearch_oracle(P, Q);
  for (std::uint64_t seed : {1, 2}) {
    auto r = multi_search(P, Q, cfg_m(64, seed));
    CHECK(r.ranks == oracle);
    CHECK(r.batches == 3);
    CHECK(r.dag.levels == 2);
  }
}

TEST_CASE("small query sets use one batch") {
  CHECK(batch_count(10, 1024, 64) == 1);
  CHECK(batch_count(8192, 1024, 64) == 3);
  CHECK(batch_count(0, 5, 64) == 1);
}

TEST_CASE("queued search phase gives the same answers") {
  Rng rng(4);
  std::vector<std::int64_t> P(300), Q(2000);
  for (std::size_t i = 0; i < P.size(); ++i) P[i] = static_cast<std::int64_t>(i) * 5;
  for (auto& q : Q) q = rng.range(-10, 1600);
  auto plain = multi_search(P, Q, cfg_m(64, 2));
  auto queued = multi_search(P, Q, cfg_m(64, 2), true);
  CHECK(queued.ranks == plain.ranks);
  CHECK(queued.ranks == bsearch_oracle(P, Q));
  CHECK(queued.report.violations.empty());
  for (auto& st : queued.report.per_round) CHECK(st.max_in <= 64);
  CHECK(queued.search_rounds >= 3 * (queued.batches + queued.dag.levels));
}
