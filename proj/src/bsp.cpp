#include "mrsim/bsp.hpp"

#include <algorithm>

namespace mrsim {

namespace {

constexpr std::uint16_t kTagCell = 1;
constexpr std::uint16_t kTagMsg = 2;
// The processor header item (pi_i) keeps a node alive when its cells are empty.
constexpr std::uint16_t kTagProc = 3;

NodeLabel proc_label(std::uint64_t i) { return NodeLabel("bsp", {i}); }

std::uint64_t bsp_memory_bound(const std::vector<std::vector<std::int64_t>>& init, std::uint64_t P) {
  std::uint64_t N = 0;
  for (auto& s : init) N += s.size();
  return std::max<std::uint64_t>(1, (N + P - 1) / P);
}

void check_step(const BspStep& st, std::uint64_t pid, std::uint64_t step, std::uint64_t P, std::uint64_t M) {
  if (st.out.size() > M)
    throw BspBudgetViolation(pid, step,
                             "processor " + std::to_string(pid) + " sends " + std::to_string(st.out.size()) +
                                 " messages in superstep " + std::to_string(step) + " (M=" + std::to_string(M) + ")");
  if (st.state.size() > M)
    throw BspBudgetViolation(pid, step, "processor " + std::to_string(pid) + " state exceeds M");
  for (auto& m : st.out)
    if (m.to >= P) throw std::out_of_range("message to processor " + std::to_string(m.to));
}

void check_inbox(std::size_t n, std::uint64_t pid, std::uint64_t step, std::uint64_t M) {
  if (n > M)
    throw BspBudgetViolation(pid, step,
                             "processor " + std::to_string(pid) + " receives " + std::to_string(n) +
                                 " messages in superstep " + std::to_string(step) + " (M=" + std::to_string(M) + ")");
}

}  // namespace

BspResult bsp_oracle(const BspProgram& prog, std::uint64_t seed) {
  BspResult res;
  const std::uint64_t P = prog.P;
  res.states.resize(P);
  for (std::uint64_t i = 0; i < P; ++i) res.states[i] = prog.init_state(i);
  const std::uint64_t M = bsp_memory_bound(res.states, P);
  res.M = M;
  for (auto& s : res.states)
    if (s.size() > M) throw std::invalid_argument("initial state exceeds ceil(N/P)");
  res.inboxes.assign(P, {});
  for (std::uint64_t step = 0; step < prog.supersteps; ++step) {
    std::vector<std::vector<BspMessage>> next(P);
    for (std::uint64_t i = 0; i < P; ++i) {
      Rng rng(seed, proc_label(i), step + 1);
      auto st = prog.superstep(i, step, res.states[i], res.inboxes[i], rng);
      check_step(st, i, step, P, M);
      res.states[i] = std::move(st.state);
      for (auto& m : st.out) next[m.to].push_back({i, m.value});
    }
    for (std::uint64_t i = 0; i < P; ++i) check_inbox(next[i].size(), i, step, M);
    res.inboxes = std::move(next);
  }
  return res;
}

BspResult simulate_bsp(const BspProgram& prog, const EngineConfig& cfg_in) {
  const std::uint64_t P = prog.P;
  if (P == 0) throw std::invalid_argument("BSP program needs at least one processor");
  std::vector<std::vector<std::int64_t>> init(P);
  for (std::uint64_t i = 0; i < P; ++i) init[i] = prog.init_state(i);
  const std::uint64_t M = bsp_memory_bound(init, P);
  for (auto& s : init)
    if (s.size() > M) throw std::invalid_argument("initial state exceeds ceil(N/P)");

  EngineConfig cfg = cfg_in;
  cfg.M = std::max<std::uint64_t>(4, 2 * M + 1);

  auto send_state = [](NodeContext& ctx, const NodeLabel& to, std::span<const std::int64_t> state) {
    for (std::size_t c = 0; c < state.size(); ++c)
      ctx.send(to, Item::value(static_cast<std::int64_t>(c), state[c]).with_tag(kTagCell));
  };

  Algorithm a;
  a.name = "bsp";
  // One input per memory word (processor, cell, value) plus one header
  // input per processor with cell = -1.
  a.place = [](NodeContext& ctx) {
    for (auto& it : ctx.items()) {
      auto to = proc_label(static_cast<std::uint64_t>(it.w[0]));
      if (it.w[1] < 0)
        ctx.send(to, Item::make(ItemKind::Control, 1, it.w[0]).with_tag(kTagProc));
      else
        ctx.send(to, Item::value(it.w[1], it.w[2]).with_tag(kTagCell));
    }
  };
  a.transition = [&prog, M, P, send_state](NodeContext& ctx) {
    const std::uint64_t pid = ctx.self()[0];
    const std::uint64_t step = ctx.phase_round() - 1;
    std::vector<std::pair<std::int64_t, std::int64_t>> cells;
    std::vector<BspMessage> inbox;
    for (auto& it : ctx.items()) {
      if (it.tag == kTagCell)
        cells.emplace_back(it.w[0], it.w[1]);
      else if (it.tag == kTagMsg)
        inbox.push_back({static_cast<std::uint64_t>(it.w[0]), it.w[1]});
      else
        ctx.keep(it);
    }
    std::sort(cells.begin(), cells.end());
    std::vector<std::int64_t> state;
    for (auto& c : cells) state.push_back(c.second);
    if (step > 0) check_inbox(inbox.size(), pid, step - 1, M);
    auto st = prog.superstep(pid, step, state, inbox, ctx.rng());
    check_step(st, pid, step, P, M);
    send_state(ctx, ctx.self(), st.state);
    for (auto& m : st.out)
      ctx.send(proc_label(m.to), Item::value(static_cast<std::int64_t>(pid), m.value).with_tag(kTagMsg));
  };
  a.done = [S = prog.supersteps](const PhaseView& v) { return v.phase_rounds >= S + 1; };

  std::vector<Item> inputs;
  for (std::uint64_t i = 0; i < P; ++i) {
    inputs.push_back(Item::make(ItemKind::Value, 1, static_cast<std::int64_t>(i), -1));
    for (std::size_t c = 0; c < init[i].size(); ++c)
      inputs.push_back(Item::make(ItemKind::Value, 1, static_cast<std::int64_t>(i), static_cast<std::int64_t>(c),
                                  init[i][c]));
  }

  BspResult res;
  res.M = M;
  try {
    res.report = run(a, inputs, cfg);
  } catch (const BudgetViolation& e) {
    const auto& n = e.violation.node;
    std::uint64_t pid = n.ns() == "bsp" ? n[0] : 0;
    std::uint64_t step = e.violation.round == 0 ? 0 : e.violation.round - 1;
    throw BspBudgetViolation(pid, step, std::string("engine budget exceeded: ") + e.what());
  }
  res.states.assign(P, {});
  res.inboxes.assign(P, {});
  for (auto& ns : res.report.outputs) {
    if (ns.label.ns() != "bsp") continue;
    std::uint64_t pid = ns.label[0];
    std::vector<std::pair<std::int64_t, std::int64_t>> cells;
    for (auto& it : ns.items) {
      if (it.tag == kTagCell)
        cells.emplace_back(it.w[0], it.w[1]);
      else if (it.tag == kTagMsg)
        res.inboxes[pid].push_back({static_cast<std::uint64_t>(it.w[0]), it.w[1]});
    }
    std::sort(cells.begin(), cells.end());
    for (auto& c : cells) res.states[pid].push_back(c.second);
    check_inbox(res.inboxes[pid].size(), pid, prog.supersteps == 0 ? 0 : prog.supersteps - 1, M);
  }
  return res;
}

BspProgram ring_shift_program(std::uint64_t P) {
  BspProgram p;
  p.P = P;
  p.supersteps = 1;
  p.init_state = [](std::uint64_t i) { return std::vector<std::int64_t>{static_cast<std::int64_t>(100 + i)}; };
  p.superstep = [P](std::uint64_t i, std::uint64_t, std::span<const std::int64_t> s, std::span<const BspMessage>,
                    Rng&) {
    BspStep st;
    st.out.push_back({(i + 1) % P, s[0]});
    return st;
  };
  return p;
}

BspProgram tree_broadcast_program(std::uint64_t P, std::uint64_t fanout, std::int64_t root_value) {
  BspProgram p;
  p.P = P;
  std::uint64_t steps = 0;
  for (std::uint64_t reach = 1; reach < P; reach *= fanout) ++steps;
  p.supersteps = steps;
  // Cell 0 holds the value, cell 1 a "has value" flag; padding cells give
  // each processor room for fanout - 1 outgoing messages.
  p.init_state = [fanout, root_value](std::uint64_t i) {
    std::vector<std::int64_t> s(std::max<std::uint64_t>(2, fanout), 0);
    if (i == 0) s[0] = root_value, s[1] = 1;
    return s;
  };
  p.superstep = [P, fanout, steps](std::uint64_t i, std::uint64_t step, std::span<const std::int64_t> s,
                                   std::span<const BspMessage> inbox, Rng&) {
    BspStep st;
    st.state.assign(s.begin(), s.end());
    for (auto& m : inbox) st.state[0] = m.value, st.state[1] = 1;
    std::uint64_t stride = 1;
    for (std::uint64_t k = step + 1; k < steps; ++k) stride *= fanout;
    if (st.state[1] == 1 && i % (stride * fanout) == 0)
      for (std::uint64_t t = 1; t < fanout; ++t)
        if (i + t * stride < P) st.out.push_back({i + t * stride, st.state[0]});
    return st;
  };
  return p;
}

}  // namespace mrsim
