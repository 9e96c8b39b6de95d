#include "mrsim/verify.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "mrsim/bruteforce.hpp"
#include "mrsim/bsp.hpp"
#include "mrsim/fifoqueue.hpp"
#include "mrsim/multisearch.hpp"
#include "mrsim/prefix.hpp"
#include "mrsim/samplesort.hpp"
#include "mrsim/wordcount.hpp"

namespace mrsim {

namespace {

struct Suite {
  SuiteReport& r;
  void check(bool ok, const std::string& what) {
    ++r.checks;
    if (ok) return;
    ++r.failures;
    if (r.failed.size() < 8) r.failed.push_back(what);
  }
  void add(const ExecutionReport& rep) {
    r.rounds += rep.rounds;
    r.communication += rep.total_communication;
    check(rep.violations.empty(), "violations recorded");
  }
};

EngineConfig config(std::uint64_t M, std::uint64_t seed) {
  EngineConfig c;
  c.M = M;
  c.seed = seed;
  return c;
}

std::vector<std::int64_t> values(Rng& rng, std::size_t n, std::int64_t lo, std::int64_t hi) {
  std::vector<std::int64_t> v(n);
  for (auto& x : v) x = rng.range(lo, hi);
  return v;
}

std::vector<std::uint64_t> stable_ranks(const std::vector<std::int64_t>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<std::uint64_t> r(x.size());
  for (std::size_t p = 0; p < order.size(); ++p) r[order[p]] = p;
  return r;
}

bool is_permutation_of_range(std::vector<std::uint64_t> r) {
  std::sort(r.begin(), r.end());
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r[i] != i) return false;
  return true;
}

std::string tag(std::uint64_t seed, const std::string& what) { return "seed " + std::to_string(seed) + ": " + what; }

void wordcount_suite(Suite& s, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> tokens;
  std::map<std::string, std::int64_t> oracle;
  for (int i = 0; i < 500; ++i) {
    std::string w = "w" + std::to_string(rng.below(i % 7 == 0 ? 3 : 40));
    tokens.push_back(w);
    ++oracle[w];
  }
  auto r = word_count(tokens, config(64, seed));
  s.add(r.report);
  s.check(r.counts == oracle, tag(seed, "word counts"));
  s.check(r.report.rounds == 1, tag(seed, "one round"));
}

void prefix_suite(Suite& s, std::uint64_t seed) {
  Rng rng(seed);
  for (std::uint64_t n : {64, 1000})
    for (std::uint64_t M : {4, 16, 64}) {
      auto v = values(rng, n, -1000, 1000);
      auto r = prefix_sums(v, config(M, seed));
      s.add(r.report);
      std::vector<std::int64_t> scan(n);
      std::partial_sum(v.begin(), v.end(), scan.begin());
      const std::string at = " n=" + std::to_string(n) + " M=" + std::to_string(M);
      s.check(r.sums == scan, tag(seed, "sums" + at));
      s.check(r.report.rounds == 2 * r.geometry.L, tag(seed, "rounds" + at));
      s.check(r.report.total_communication <= 4 * n * r.geometry.L, tag(seed, "communication" + at));
    }
}

void index_suite(Suite& s, std::uint64_t seed) {
  auto r = random_indexing(1000, 1000, config(64, seed));
  s.add(r.report);
  s.check(is_permutation_of_range(r.ranks), tag(seed, "permutation"));
}

void bsp_suite(Suite& s, std::uint64_t seed) {
  const BspProgram progs[] = {ring_shift_program(16), tree_broadcast_program(20, 3, static_cast<std::int64_t>(seed))};
  for (auto& p : progs) {
    auto r = simulate_bsp(p, config(64, seed));
    auto o = bsp_oracle(p, seed);
    s.add(r.report);
    s.check(r.states == o.states && r.inboxes == o.inboxes, tag(seed, "oracle"));
    s.check(r.report.rounds == p.supersteps + 1, tag(seed, "rounds"));
  }
}

void pram_suite(Suite& s, std::uint64_t seed, const VerifyOptions& opt) {
  std::vector<Combine> cs{Combine::Sum, Combine::Min, Combine::Max};
  if (opt.combine) cs = {*opt.combine};
  for (auto c : cs) {
    auto p = random_pram_program(16, 16, 3, c, seed);
    auto r = simulate_pram(p, config(16, seed));
    auto o = pram_oracle(p);
    s.add(r.report);
    const std::string at = " " + std::string(combine_name(c));
    s.check(r.memory == o.memory && r.states == o.states, tag(seed, "oracle" + at));
    s.check(r.report.rounds == 1 + p.T * (3 * r.funnel.L + 1), tag(seed, "rounds" + at));
  }
}

void multisearch_suite(Suite& s, std::uint64_t seed) {
  Rng rng(seed);
  auto P = values(rng, 200, -5000, 5000);
  std::sort(P.begin(), P.end());
  P.erase(std::unique(P.begin(), P.end()), P.end());
  auto Q = values(rng, 1500, -5200, 5200);
  auto r = multi_search(P, Q, config(64, seed));
  s.add(r.report);
  bool ok = r.ranks.size() == Q.size();
  for (std::size_t i = 0; ok && i < Q.size(); ++i)
    ok = r.ranks[i] == static_cast<std::uint64_t>(std::lower_bound(P.begin(), P.end(), Q[i]) - P.begin());
  s.check(ok, tag(seed, "ranks"));
  s.check(r.search_rounds == r.batches + r.dag.levels, tag(seed, "search rounds"));
}

// Sixteen senders in rotating groups of four push twice M/2 per round into
// one sink that logs its consumption order.
Algorithm fan_in(std::shared_ptr<std::vector<std::int64_t>> log) {
  Algorithm a;
  a.name = "fan-in";
  auto f = [log](NodeContext& ctx) {
    const auto r = ctx.round();
    if (ctx.self().ns() == "sink") {
      for (auto& it : ctx.items()) log->push_back(it.w[0] * 1000 + it.w[1]);
      return;
    }
    const auto snd = static_cast<std::uint64_t>(ctx.items()[0].w[0]);
    if (r < 16) ctx.keep(ctx.items()[0]);
    if (r < 16 && r % 4 == snd / 4)
      for (int k = 0; k < 4; ++k)
        ctx.send(NodeLabel("sink", {}), Item::value(static_cast<std::int64_t>(snd), static_cast<std::int64_t>(r * 4 + k)));
  };
  a.place = f;
  a.transition = f;
  return a;
}

void fifo_suite(Suite& s, std::uint64_t seed) {
  std::vector<NodeState> init;
  for (std::uint64_t i = 0; i < 16; ++i) init.push_back({NodeLabel("snd", {i}), {Item::value(static_cast<std::int64_t>(i), 0)}});
  auto base_log = std::make_shared<std::vector<std::int64_t>>();
  auto wrap_log = std::make_shared<std::vector<std::int64_t>>();
  auto mcfg = config(16, seed);
  mcfg.mode = Mode::Modified;
  Session m(mcfg);
  m.load_states(init);
  m.run(fan_in(base_log));
  s.add(m.finish());
  Session w(config(16, seed));
  w.load_states(init);
  w.run(wrap(fan_in(wrap_log), 16));
  auto rep = w.finish();
  s.add(rep);
  s.check(base_log->size() == 256 && *wrap_log == *base_log, tag(seed, "consumption order"));
  bool in_ok = true;
  for (auto& st : rep.per_round) in_ok = in_ok && st.max_in <= 16;
  s.check(in_ok, tag(seed, "strict receive budget"));
}

void brutesort_suite(Suite& s, std::uint64_t seed) {
  Rng rng(seed);
  auto x = values(rng, 64, -20, 20);
  auto r = brute_sort(x, config(16, seed));
  s.add(r.report);
  s.check(r.ranks == stable_ranks(x), tag(seed, "ranks"));
}

void sort_suite(Suite& s, std::uint64_t seed) {
  Rng rng(seed);
  auto x = values(rng, 4000, -500, 500);
  auto r = sample_sort(x, config(64, seed));
  s.add(r.report);
  s.check(r.ranks == stable_ranks(x), tag(seed, "ranks"));
  bool sound = true;
  for (auto& lv : r.levels) sound = sound && lv.unsound == 0;
  s.check(sound, tag(seed, "bucket soundness"));
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"wordcount", "prefix",    "index",     "bsp", "pram",
                                              "multisearch", "fifo", "brutesort", "sort"};
  return names;
}

std::optional<std::string> canonical_suite(std::string_view name) {
  if (name == "bsp-demo") return "bsp";
  if (name == "pram-demo") return "pram";
  for (auto& n : suite_names())
    if (n == name) return n;
  return std::nullopt;
}

SuiteReport run_suite(std::string_view name, const VerifyOptions& opt) {
  auto canon = canonical_suite(name);
  if (!canon) throw std::invalid_argument("unknown suite: " + std::string(name));
  SuiteReport rep;
  rep.name = *canon;
  Suite s{rep};
  for (std::uint64_t seed = 1; seed <= opt.seeds; ++seed) {
    try {
      if (rep.name == "wordcount") wordcount_suite(s, seed);
      else if (rep.name == "prefix") prefix_suite(s, seed);
      else if (rep.name == "index") index_suite(s, seed);
      else if (rep.name == "bsp") bsp_suite(s, seed);
      else if (rep.name == "pram") pram_suite(s, seed, opt);
      else if (rep.name == "multisearch") multisearch_suite(s, seed);
      else if (rep.name == "fifo") fifo_suite(s, seed);
      else if (rep.name == "brutesort") brutesort_suite(s, seed);
      else sort_suite(s, seed);
    } catch (const std::exception& e) {
      s.check(false, tag(seed, std::string("threw: ") + e.what()));
    }
  }
  return rep;
}

std::string suite_json(const SuiteReport& r) {
  nlohmann::ordered_json j;
  j["suite"] = r.name;
  j["status"] = r.passed() ? "pass" : "fail";
  j["checks"] = r.checks;
  j["failures"] = r.failures;
  j["rounds"] = r.rounds;
  j["total_communication"] = r.communication;
  j["failed"] = r.failed;
  return j.dump();
}

}  // namespace mrsim
