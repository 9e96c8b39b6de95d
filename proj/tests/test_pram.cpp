#include <doctest.h>

#include "mrsim/pram.hpp"

using namespace mrsim;

namespace {

EngineConfig cfg_m(std::uint64_t M, std::uint64_t seed = 1) {
  EngineConfig c;
  c.M = M;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("combine operators are commutative and associative on random triples") {
  Rng r(5);
  for (Combine c : {Combine::Sum, Combine::Min, Combine::Max})
    for (int k = 0; k < 1000; ++k) {
      std::int64_t a = r.range(-1'000'000, 1'000'000), b = r.range(-1'000'000, 1'000'000),
                   d = r.range(-1'000'000, 1'000'000);
      CHECK(apply_combine(c, a, b) == apply_combine(c, b, a));
      CHECK(apply_combine(c, apply_combine(c, a, b), d) == apply_combine(c, a, apply_combine(c, b, d)));
    }
  CHECK(parse_combine("min") == Combine::Min);
  CHECK_FALSE(parse_combine("xor"));
  CHECK_THROWS_AS(apply_combine(Combine::Sum, INT64_MAX, 1), CombineOverflow);
}

TEST_CASE("four processors writing 1 with Sum") {
  PramProgram p;
  p.P = 4;
  p.memory = {0};
  p.T = 1;
  p.step = [](std::uint64_t, std::uint64_t, std::int64_t s, std::optional<std::int64_t>) {
    PramAction a;
    a.state = s;
    a.write = {{0, 1}};
    return a;
  };
  auto r = simulate_pram(p, cfg_m(64));
  CHECK(r.memory[0] == 4);
  CHECK(pram_oracle(p).memory[0] == 4);
  CHECK(r.report.violations.empty());
}

TEST_CASE("eight processors read the same cell") {
  PramProgram p;
  p.P = 8;
  p.memory = {0, 0, 0, 42};
  p.T = 1;
  p.first_read.assign(8, 3);
  p.step = [](std::uint64_t, std::uint64_t, std::int64_t, std::optional<std::int64_t> got) {
    PramAction a;
    a.state = got.value_or(-1);
    return a;
  };
  for (std::uint64_t M : {4, 8, 64}) {
    auto r = simulate_pram(p, cfg_m(M));
    CHECK(r.states == std::vector<std::int64_t>(8, 42));
    CHECK(r.memory == p.memory);
    CHECK(r.requests_per_step[0] == 8);
  }
}

TEST_CASE("histogram with M=8 takes 13 rounds plus placement") {
  auto p = histogram_program(256, 16);
  auto r = simulate_pram(p, cfg_m(8));
  CHECK(r.memory == std::vector<std::int64_t>(16, 16));
  CHECK(r.funnel.L == 4);
  CHECK(r.report.rounds == 14);
  CHECK(r.report.violations.empty());
  CHECK(pram_oracle(p).memory == r.memory);
}

TEST_CASE("empty program leaves memory unchanged") {
  auto p = histogram_program(8, 4);
  p.memory = {1, 2, 3, 4};
  p.T = 0;
  CHECK(pram_oracle(p).memory == p.memory);
  auto r = simulate_pram(p, cfg_m(8));
  CHECK(r.memory == p.memory);
  CHECK(r.report.rounds == 1);
}

TEST_CASE("demo programs") {
  std::vector<std::int64_t> v{5, -3, 9, 2, 11, 0, 4, 7, -8, 6};
  auto s = simulate_pram(sum_reduce_program(v), cfg_m(8));
  CHECK(s.memory.back() == 33);
  auto m = simulate_pram(max_scan_program(v), cfg_m(8));
  std::int64_t run = INT64_MIN;
  for (std::size_t i = 0; i < v.size(); ++i) {
    run = std::max(run, v[i]);
    CHECK(m.memory[i] == run);
    CHECK(m.states[i] == run);
  }
}

TEST_CASE("address errors") {
  auto p = histogram_program(4, 2);
  p.first_read = {7};
  CHECK_THROWS_AS(pram_oracle(p), AddressOutOfRange);
  CHECK_THROWS_AS(simulate_pram(p, cfg_m(8)), AddressOutOfRange);
}

TEST_CASE("simulator matches the sequential oracle on random programs") {
  for (Combine c : {Combine::Sum, Combine::Min, Combine::Max})
    for (std::uint64_t seed = 1; seed <= 4; ++seed)
      for (std::uint64_t P : {1, 5, 16, 64})
        for (std::uint64_t M : {4, 8, 16}) {
          auto p = random_pram_program(P, 16, 3, c, seed);
          auto r = simulate_pram(p, cfg_m(M, seed));
          auto o = pram_oracle(p);
          CHECK(r.memory == o.memory);
          CHECK(r.states == o.states);
          CHECK(r.report.violations.empty());
          CHECK(r.report.rounds == 1 + 3 * (3 * r.funnel.L + 1));
          for (std::uint64_t t = 0; t < 3; ++t)
            CHECK(r.active_labels_per_step[t] <= P + 16 + r.requests_per_step[t] * r.funnel.L);
        }
}

TEST_CASE("golden random Min program") {
  auto p = random_pram_program(64, 32, 5, Combine::Min, 2024);
  auto o = pram_oracle(p);
  auto r = simulate_pram(p, cfg_m(8, 3));
  CHECK(r.memory == o.memory);
  CHECK(r.states == o.states);
}

TEST_CASE("permuting processor ids leaves memory unchanged") {
  auto p = histogram_program(64, 8);
  auto base = simulate_pram(p, cfg_m(8)).memory;
  auto q = p;
  q.step = [](std::uint64_t i, std::uint64_t, std::int64_t s, std::optional<std::int64_t>) {
    PramAction a;
    a.state = s;
    a.write = {{(i * 37 + 11) % 64 % 8, 1}};
    return a;
  };
  CHECK(simulate_pram(q, cfg_m(8)).memory == base);
}
