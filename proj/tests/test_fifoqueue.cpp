#include <doctest.h>

#include <memory>

#include "mrsim/fifoqueue.hpp"

using namespace mrsim;

namespace {

struct FanIn {
  std::uint64_t senders = 64, group = 4, per_sender = 4, rounds = 256;
  std::shared_ptr<std::vector<std::int64_t>> log = std::make_shared<std::vector<std::int64_t>>();
};

// Senders ("snd", s) fire in rotating groups; the sink folds every item it
// consumes into a digest and logs the consumption order.
Algorithm fan_in(const FanIn& p) {
  Algorithm a;
  a.name = "fan-in";
  auto f = [p](NodeContext& ctx) {
    const auto r = ctx.round();
    if (ctx.self().ns() == "sink") {
      std::int64_t digest = 0, count = 0;
      for (auto& it : ctx.items()) {
        if (it.tag == 9) {
          digest = it.w[0];
          count = it.w[1];
          continue;
        }
        p.log->push_back(it.w[0] * 1'000'000 + it.w[1]);
        digest = static_cast<std::int64_t>(mix64(static_cast<std::uint64_t>(digest) ^ static_cast<std::uint64_t>(it.w[1])));
        ++count;
      }
      ctx.keep(Item::make(ItemKind::Value, 1, digest, count).with_tag(9));
      return;
    }
    const auto s = static_cast<std::uint64_t>(ctx.items()[0].w[0]);
    const std::uint64_t groups = p.senders / p.group;
    if (r < p.rounds) ctx.keep(ctx.items()[0]);
    if (r < p.rounds && r % groups == s / p.group)
      for (std::uint64_t k = 0; k < p.per_sender; ++k)
        ctx.send(NodeLabel("sink", {}),
                 Item::make(ItemKind::Value, 1, static_cast<std::int64_t>(s), static_cast<std::int64_t>(r * 100 + k)));
  };
  a.place = f;
  a.transition = f;
  a.done = [p](const PhaseView& v) {
    if (v.phase_rounds <= p.rounds || v.report.per_round.empty()) return false;
    auto& last = v.report.per_round.back();
    return last.buffered == 0 && last.external == 0;
  };
  return a;
}

std::vector<NodeState> sender_states(std::uint64_t n) {
  std::vector<NodeState> st;
  for (std::uint64_t s = 0; s < n; ++s)
    st.push_back({NodeLabel("snd", {s}), {Item::make(ItemKind::Control, 1, static_cast<std::int64_t>(s))}});
  return st;
}

EngineConfig cfg_mode(Mode m, std::uint64_t M) {
  EngineConfig c;
  c.M = M;
  c.mode = m;
  c.round_limit = 100000;
  return c;
}

}  // namespace

TEST_CASE("greedy grouping") {
  std::vector<std::uint64_t> c{10, 10, 10};
  auto g = group_senders(5, c, 32);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == std::vector<std::size_t>{0});
  CHECK(g[1] == std::vector<std::size_t>{1});
  CHECK(g[2] == std::vector<std::size_t>{2});

  std::vector<std::uint64_t> small{3, 3, 3, 3, 3, 3};
  auto h = group_senders(0, small, 16);
  REQUIRE(h.size() == 3);
  for (auto& grp : h) CHECK(grp.size() == 2);  // 3 + 3 + 3 > 8
  CHECK(group_senders(0, std::vector<std::uint64_t>{}, 16).empty());
}

TEST_CASE("single sender reaches an empty queue directly") {
  Algorithm a;
  a.name = "one";
  auto f = [](NodeContext& ctx) {
    if (ctx.self().ns() == "src" && ctx.round() == 0)
      for (int k = 0; k < 5; ++k) ctx.send(NodeLabel("dst", {}), Item::value(k, 10 * k));
    if (ctx.self().ns() == "dst")
      for (auto& it : ctx.items()) ctx.keep(it);
  };
  a.place = f;
  a.transition = f;
  Session s(cfg_mode(Mode::Strict, 32));
  s.load_states({{NodeLabel("src", {}), {Item::value(0, 0)}}});
  s.run(wrap(a, 32));
  auto out = unwrap_outputs(s.finish().outputs);
  REQUIRE(out.size() == 1);
  CHECK(out[0].label == NodeLabel("dst", {}));
  CHECK(out[0].items.size() == 5);
  CHECK(s.report().rounds == 6);  // two cycles: send, then consume
  for (auto& st : s.report().per_round) CHECK(st.max_in <= 32);
}

TEST_CASE("adversarial fan-in keeps strict budgets and FIFO order") {
  const std::uint64_t M = 16;
  FanIn base;
  Session m(cfg_mode(Mode::Modified, M));
  m.load_states(sender_states(base.senders));
  m.run(fan_in(base));
  const auto& mrep = m.report();
  auto mout = m.finish().outputs;
  REQUIRE(base.log->size() == 4096);

  FanIn wp;
  std::uint64_t bad_occupancy = 0, peak_list = 0, cycles = 0;
  auto cfg = cfg_mode(Mode::Strict, M);
  cfg.observer = [&](const RoundView& rv) {
    if ((rv.round + 1) % 3 != 0) return;
    ++cycles;
    auto occ = check_occupancy(rv.states, M);
    bad_occupancy += occ.out_of_range;
    peak_list = std::max(peak_list, occ.list_nodes);
  };
  Session w(cfg);
  w.load_states(sender_states(wp.senders));
  w.run(wrap(fan_in(wp), M));
  auto wrep = w.finish();

  CHECK(wrep.violations.empty());
  for (auto& st : wrep.per_round) CHECK(st.max_in <= M);
  CHECK(*wp.log == *base.log);
  CHECK(unwrap_outputs(wrep.outputs) == unwrap_outputs(mout));
  CHECK(bad_occupancy == 0);
  CHECK(peak_list > 10);

  std::uint64_t buffered = 0;
  for (auto& st : mrep.per_round) buffered = std::max(buffered, st.buffered);
  const std::uint64_t drain_bound = buffered / (M / 4) + 1;
  CHECK(wrep.rounds <= 3 * mrep.rounds + 3 * drain_bound);
  CHECK(wrep.total_communication <= 4 * mrep.total_communication);
  MESSAGE("modified R=" << mrep.rounds << " C=" << mrep.total_communication << "; wrapped R=" << wrep.rounds
                        << " C=" << wrep.total_communication << " peak list=" << peak_list << " drain bound="
                        << drain_bound);
}

TEST_CASE("too many senders is reported") {
  FanIn p;
  p.group = 8;
  p.per_sender = 1;
  p.rounds = 4;
  Session w(cfg_mode(Mode::Strict, 16));
  w.load_states(sender_states(p.senders));
  CHECK_THROWS_AS(w.run(wrap(fan_in(p), 16)), SenderCountExceeded);
}
