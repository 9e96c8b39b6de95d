#include "mrsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

namespace mrsim {

struct NodeContext::Envelope {
  NodeLabel dest;
  std::uint64_t order;
  std::uint32_t origin;
  Item item;
};

using Envelope = NodeContext::Envelope;

class StateStore {
 public:
  std::vector<NodeLabel> labels;
  std::vector<std::size_t> off{0};
  // Modified mode: the first kept[i] items of node i were kept by the node
  // itself, the rest is its FIFO input buffer.
  std::vector<std::uint32_t> kept;
  std::vector<Item> items;

  std::size_t size() const { return labels.size(); }
  void clear() {
    labels.clear();
    off.assign(1, 0);
    kept.clear();
    items.clear();
  }
};

std::size_t StateView::size() const { return s_->size(); }
const NodeLabel& StateView::label(std::size_t i) const { return s_->labels[i]; }
std::span<const Item> StateView::items(std::size_t i) const {
  return {s_->items.data() + s_->off[i], s_->off[i + 1] - s_->off[i]};
}
std::optional<std::size_t> StateView::find(const NodeLabel& l) const {
  auto it = std::lower_bound(s_->labels.begin(), s_->labels.end(), l);
  if (it == s_->labels.end() || *it != l) return std::nullopt;
  return static_cast<std::size_t>(it - s_->labels.begin());
}
std::vector<NodeState> StateView::copy() const {
  std::vector<NodeState> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    auto its = items(i);
    out.push_back({label(i), {its.begin(), its.end()}});
  }
  return out;
}

const NodeState* ExecutionReport::find_output(const NodeLabel& l) const {
  auto it = std::lower_bound(outputs.begin(), outputs.end(), l,
                             [](const NodeState& s, const NodeLabel& x) { return s.label < x; });
  if (it == outputs.end() || it->label != l) return nullptr;
  return &*it;
}

BudgetViolation::BudgetViolation(const Violation& v, ExecutionReport partial)
    : EngineError("budget violation at round " + std::to_string(v.round) + " node " + v.node.to_string() +
                      " (" + v.direction + " weight " + std::to_string(v.weight) + ")",
                  std::move(partial)),
      violation(v) {}

void NodeContext::send(const NodeLabel& dest, Item item) {
  auto* out = static_cast<std::vector<Envelope>*>(out_);
  out_weight_ += item.weight;
  if (dest != *self_) ext_weight_ += item.weight;
  out->push_back(Envelope{dest, 0, origin_, std::move(item)});
}

std::vector<Message> NodeContext::invoke(const std::function<void(NodeContext&)>& f, std::span<const Item> items,
                                         std::uint64_t round) const {
  std::vector<Envelope> buf;
  NodeContext sub;
  sub.self_ = self_;
  sub.round_ = round;
  sub.phase_round_ = round;
  sub.budget_ = budget_;
  sub.seed_ = seed_;
  sub.items_ = items;
  sub.out_ = &buf;
  sub.origin_ = origin_;
  f(sub);
  std::vector<Message> out;
  out.reserve(buf.size());
  for (std::size_t k = 0; k < buf.size(); ++k) out.push_back({std::move(buf[k].dest), std::move(buf[k].item), *self_, k});
  return out;
}

Rng& NodeContext::rng() {
  if (!rng_) rng_.emplace(seed_, *self_, round_);
  return *rng_;
}

std::uint64_t ipow(std::uint64_t base, std::uint64_t e) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < e; ++i) {
    if (base != 0 && r > UINT64_MAX / base) return UINT64_MAX;
    r *= base;
  }
  return r;
}

std::uint64_t ceil_log(std::uint64_t base, std::uint64_t x) {
  if (base < 2) throw std::invalid_argument("ceil_log base must be at least 2");
  std::uint64_t L = 0;
  unsigned __int128 p = 1;
  while (p < x) {
    p *= base;
    ++L;
  }
  return L;
}

std::uint64_t default_round_limit(std::uint64_t input_weight, std::uint64_t M) {
  if (const char* env = std::getenv("MRSIM_ROUND_LIMIT")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && v > 0) return v;
  }
  std::uint64_t d = std::max<std::uint64_t>(2, M / 2);
  return 64 * ceil_log(d, std::max<std::uint64_t>(1, input_weight)) + 64;
}

Session::Session(EngineConfig cfg) : cfg_(std::move(cfg)), store_(std::make_unique<StateStore>()) {
  if (cfg_.M < 4) throw std::invalid_argument("M must be at least 4");
  if (cfg_.threads == 0) cfg_.threads = 1;
}

Session::~Session() = default;

StateView Session::states() const { return StateView(*store_); }

void Session::load_inputs(std::span<const Item> inputs, std::string_view input_ns) {
  std::vector<NodeState> st;
  st.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) st.push_back({NodeLabel(input_ns, {i}), {inputs[i]}});
  load_states(std::move(st));
}

void Session::load_states(std::vector<NodeState> states) {
  std::sort(states.begin(), states.end(), [](const NodeState& a, const NodeState& b) { return a.label < b.label; });
  auto& s = *store_;
  s.clear();
  std::uint64_t weight = 0;
  for (auto& ns : states) {
    if (!s.labels.empty() && s.labels.back() == ns.label)
      throw std::invalid_argument("duplicate label in initial states: " + ns.label.to_string());
    if (ns.items.empty()) continue;
    s.labels.push_back(ns.label);
    s.kept.push_back(static_cast<std::uint32_t>(ns.items.size()));
    for (auto& it : ns.items) {
      weight += it.weight;
      s.items.push_back(std::move(it));
    }
    s.off.push_back(s.items.size());
  }
  if (limit_ == 0) limit_ = cfg_.round_limit ? cfg_.round_limit : default_round_limit(weight, cfg_.M);
}

void Session::run(const Algorithm& alg) {
  if (!alg.transition) throw std::invalid_argument("algorithm has no transition");
  if (limit_ == 0) limit_ = cfg_.round_limit ? cfg_.round_limit : default_round_limit(0, cfg_.M);
  std::uint64_t budget = alg.budget ? alg.budget : cfg_.M;
  PhaseMark mark{alg.name, report_.rounds, 0};
  std::uint64_t phase_rounds = 0;
  while (true) {
    if (alg.done && alg.done(PhaseView{phase_rounds, report_, states()})) break;
    if (store_->size() == 0) break;
    if (report_.rounds >= limit_) {
      report_.phases.push_back(mark);
      throw RoundLimitExceeded("round limit " + std::to_string(limit_) + " reached in phase " + alg.name,
                               report_);
    }
    const Transition& f = (phase_rounds == 0 && alg.place) ? alg.place : alg.transition;
    bool quiescent = false;
    execute_round(f, phase_rounds, budget, quiescent);
    if (quiescent) break;
    ++phase_rounds;
    mark.rounds = phase_rounds;
  }
  mark.rounds = phase_rounds;
  report_.phases.push_back(mark);
}

ExecutionReport Session::finish(const std::function<void(const NodeLabel&, std::vector<Item>&)>& finalize) {
  report_.outputs = states().copy();
  if (finalize)
    for (auto& ns : report_.outputs) finalize(ns.label, ns.items);
  store_->clear();
  return report_;
}

void Session::execute_round(const Transition& f, std::uint64_t phase_round, std::uint64_t budget,
                            bool& quiescent) {
  auto& s = *store_;
  const std::size_t n = s.size();
  const bool modified = cfg_.mode == Mode::Modified;
  const std::uint64_t round = report_.rounds;

  // Modified mode feeds kept items plus a FIFO batch of at most M/2 weight.
  std::vector<std::size_t> consumed_end(n);
  std::uint64_t residue_weight = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!modified) {
      consumed_end[i] = s.off[i + 1];
      continue;
    }
    std::size_t e = s.off[i] + s.kept[i];
    std::uint64_t batch = 0;
    while (e < s.off[i + 1] && (batch == 0 || batch + s.items[e].weight <= budget / 2)) batch += s.items[e++].weight;
    consumed_end[i] = e;
    for (std::size_t k = e; k < s.off[i + 1]; ++k) residue_weight += s.items[k].weight;
  }

  std::vector<std::uint64_t> out_w(n), ext_w(n), in_w(n);
  unsigned T = (n >= 4096) ? cfg_.threads : 1;
  std::vector<std::vector<Envelope>> outs(T);
  std::vector<std::exception_ptr> errs(T);
  auto work = [&](unsigned t) {
    std::size_t lo = n * t / T, hi = n * (t + 1) / T;
    auto& out = outs[t];
    try {
      for (std::size_t i = lo; i < hi; ++i) {
        NodeContext ctx;
        ctx.self_ = &s.labels[i];
        ctx.round_ = round;
        ctx.phase_round_ = phase_round;
        ctx.budget_ = budget;
        ctx.seed_ = cfg_.seed;
        ctx.items_ = {s.items.data() + s.off[i], consumed_end[i] - s.off[i]};
        ctx.out_ = &out;
        ctx.origin_ = static_cast<std::uint32_t>(i);
        for (auto& it : ctx.items_) in_w[i] += it.weight;
        f(ctx);
        out_w[i] = ctx.out_weight_;
        ext_w[i] = ctx.ext_weight_;
      }
    } catch (...) {
      errs[t] = std::current_exception();
    }
  };
  if (T == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < T; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);

  std::vector<Envelope> env;
  if (T == 1) {
    env = std::move(outs[0]);
  } else {
    std::size_t total = 0;
    for (auto& o : outs) total += o.size();
    env.reserve(total);
    for (auto& o : outs)
      for (auto& e : o) env.push_back(std::move(e));
  }
  for (std::size_t k = 0; k < env.size(); ++k) {
    env[k].order = k;
    if (env[k].item.weight == 0)
      throw MalformedMessage("zero-weight item sent by " + s.labels[env[k].origin].to_string(), report_);
    if ((env[k].item.kind == ItemKind::Edge) != bool(env[k].item.link))
      throw MalformedMessage("edge item without exactly one label from " + s.labels[env[k].origin].to_string(),
                             report_);
  }

  if (env.empty() && residue_weight == 0) {
    s.clear();
    quiescent = true;
    return;
  }

  RoundStats st;
  st.round = round;
  st.budget = budget;
  st.active_nodes = n;
  st.buffered = residue_weight;
  std::optional<Violation> viol;
  for (std::size_t i = 0; i < n; ++i) {
    st.sent += out_w[i];
    st.external += ext_w[i];
    st.max_out = std::max(st.max_out, out_w[i]);
    st.f_time = std::max(st.f_time, in_w[i] + out_w[i]);
    std::uint64_t checked = modified ? ext_w[i] : out_w[i];
    if (!viol && checked > budget) viol = Violation{round, s.labels[i], "out", checked};
  }
  st.sent += residue_weight;

  std::sort(env.begin(), env.end(), [](const Envelope& a, const Envelope& b) {
    auto c = a.dest <=> b.dest;
    if (c != 0) return c < 0;
    return a.order < b.order;
  });

  // Next state: merge destination groups with buffer residue of old nodes.
  StateStore next;
  next.labels.reserve(n);
  next.items.reserve(env.size() + (modified ? residue_weight : 0));
  std::size_t g = 0, old = 0;
  auto has_residue = [&](std::size_t i) { return consumed_end[i] < s.off[i + 1]; };
  while (g < env.size() || old < n) {
    while (old < n && !has_residue(old)) ++old;
    bool take_group = g < env.size();
    bool take_old = old < n;
    if (!take_group && !take_old) break;
    NodeLabel label;
    if (take_group && take_old) {
      auto c = env[g].dest <=> s.labels[old];
      label = c <= 0 ? env[g].dest : s.labels[old];
      take_group = c <= 0;
      take_old = c >= 0;
    } else {
      label = take_group ? env[g].dest : s.labels[old];
    }
    std::size_t ge = g;
    if (take_group)
      while (ge < env.size() && env[ge].dest == label) ++ge;
    std::uint64_t in = 0, senders = 0;
    std::uint32_t self_origin = UINT32_MAX;
    if (auto it = std::lower_bound(s.labels.begin(), s.labels.end(), label);
        it != s.labels.end() && *it == label)
      self_origin = static_cast<std::uint32_t>(it - s.labels.begin());
    std::uint32_t prev_origin = UINT32_MAX;
    std::uint32_t kept = 0;
    if (modified) {
      for (std::size_t k = g; k < ge; ++k)
        if (env[k].origin == self_origin) {
          next.items.push_back(env[k].item);
          in += env[k].item.weight;
          ++kept;
        }
      if (take_old)
        for (std::size_t k = consumed_end[old]; k < s.off[old + 1]; ++k) next.items.push_back(s.items[k]);
      for (std::size_t k = g; k < ge; ++k)
        if (env[k].origin != self_origin) {
          next.items.push_back(std::move(env[k].item));
          in += env[k].item.weight;
          if (env[k].origin != prev_origin) ++senders;
          prev_origin = env[k].origin;
        }
    } else {
      for (std::size_t k = g; k < ge; ++k) {
        in += env[k].item.weight;
        next.items.push_back(std::move(env[k].item));
      }
    }
    st.max_in = std::max(st.max_in, in);
    if (!viol) {
      if (!modified && in > budget) viol = Violation{round, label, "in", in};
      if (modified && senders > budget) viol = Violation{round, label, "senders", senders};
    }
    next.labels.push_back(label);
    next.kept.push_back(kept);
    next.off.push_back(next.items.size());
    g = ge;
    if (take_old) ++old;
  }

  // The receiving side of the shuffle belongs to this round's reduce work.
  st.f_time = std::max(st.f_time, st.max_in);
  report_.per_round.push_back(st);
  report_.total_communication += st.sent;
  report_.rounds += 1;
  if (viol) {
    report_.violations.push_back(*viol);
    throw BudgetViolation(*viol, report_);
  }
  *store_ = std::move(next);
  if (cfg_.observer) cfg_.observer(RoundView{round, report_.per_round.back(), states()});
}

ExecutionReport run(const Algorithm& alg, std::span<const Item> inputs, const EngineConfig& cfg) {
  Session s(cfg);
  s.load_inputs(inputs);
  s.run(alg);
  return s.finish(alg.finalize);
}

std::vector<NodeState> route(std::vector<Message> messages) {
  std::stable_sort(messages.begin(), messages.end(), [](const Message& a, const Message& b) {
    auto c = a.dest <=> b.dest;
    if (c != 0) return c < 0;
    c = a.origin <=> b.origin;
    if (c != 0) return c < 0;
    return a.seq < b.seq;
  });
  std::vector<NodeState> out;
  for (auto& m : messages) {
    if (out.empty() || out.back().label != m.dest) out.push_back({m.dest, {}});
    out.back().items.push_back(std::move(m.item));
  }
  return out;
}

double lower_bound_time(std::span<const std::uint64_t> comm, std::span<const std::uint64_t> ftime, double L,
                        double B) {
  if (comm.size() != ftime.size()) throw std::invalid_argument("per-round series lengths differ");
  if (B <= 0) throw std::invalid_argument("bandwidth must be positive");
  double t = 0;
  for (std::size_t r = 0; r < comm.size(); ++r) t += static_cast<double>(ftime[r]) + L + comm[r] / B;
  return t;
}

double lower_bound_time(const ExecutionReport& r, double L, double B) {
  std::vector<std::uint64_t> c, f;
  for (auto& s : r.per_round) {
    c.push_back(s.sent);
    f.push_back(s.f_time);
  }
  return lower_bound_time(c, f, L, B);
}

}  // namespace mrsim
