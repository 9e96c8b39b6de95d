#include "mrsim/fifoqueue.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace mrsim {

namespace {

// Lane byte of wrapper items. Items of the wrapped algorithm use lane 0.
enum Lane : std::uint8_t {
  kAlg = 0,
  kQueue = 1,     // owner state: head, first, next counter, n_head
  kDrained = 2,   // drained from the oldest list node, older than kDirect
  kShipped = 3,   // shipped by a sender to a list node or directly to the owner
  kAnnounce = 4,  // Edge(sender), w0 = weight, w1 = slot
  kReply = 5,     // Edge(target), w0 = slot
  kDrain = 6,     // Edge(owner)
  kStored = 7,    // list node content
  kDest = 0x40,   // + slot: Edge(destination) held by the sender
  kHeld = 0x80,   // + slot: item waiting for its target
};

constexpr std::uint64_t kMaxSlots = 0x40;

struct QueueState {
  std::uint64_t head = 0, first = 0, next = 1, n_head = 0;
  bool empty() const { return first == 0; }
};

QueueState read_queue(const Item& it) {
  return {static_cast<std::uint64_t>(it.w[0]), static_cast<std::uint64_t>(it.w[1]),
          static_cast<std::uint64_t>(it.w[2]), static_cast<std::uint64_t>(it.w[3])};
}

Item queue_item(const QueueState& q) {
  Item it = Item::make(ItemKind::Control, 1, static_cast<std::int64_t>(q.head), static_cast<std::int64_t>(q.first),
                       static_cast<std::int64_t>(q.next), static_cast<std::int64_t>(q.n_head));
  it.lane = kQueue;
  return it;
}

Item laned(Item it, std::uint8_t lane) {
  it.lane = lane;
  return it;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

// One cycle round at a node of the wrapped algorithm.
void real_node(NodeContext& ctx, const Algorithm& alg, std::uint64_t cycle, std::uint64_t sub, std::uint64_t M) {
  const NodeLabel& self = ctx.self();
  auto items = ctx.items();
  std::vector<Item> alg_in, drained, direct, rest;
  std::optional<QueueState> q;
  std::vector<const Item*> announces;
  std::map<std::uint64_t, NodeLabel> replies;
  for (auto& it : items) {
    switch (it.lane) {
      case kAlg: alg_in.push_back(it); break;
      case kDrained: drained.push_back(laned(it, kAlg)); break;
      case kShipped: direct.push_back(laned(it, kAlg)); break;
      case kQueue: q = read_queue(it); break;
      case kAnnounce: announces.push_back(&it); break;
      case kReply: replies.emplace(static_cast<std::uint64_t>(it.w[0]), *it.link); break;
      default: rest.push_back(it); break;
    }
  }

  if (sub == 0) {
    if (q) ctx.keep(queue_item(*q));
    for (auto& it : drained) alg_in.push_back(std::move(it));
    for (auto& it : direct) alg_in.push_back(std::move(it));
    if (alg_in.empty()) return;
    const auto& f = (cycle == 0 && alg.place) ? alg.place : alg.transition;
    auto sent = ctx.invoke(f, alg_in, cycle);
    std::vector<NodeLabel> dests;
    std::vector<std::uint64_t> weight;
    for (auto& m : sent) {
      if (m.dest == self) {
        ctx.keep(laned(std::move(m.item), kAlg));
        continue;
      }
      auto pos = std::find(dests.begin(), dests.end(), m.dest) - dests.begin();
      if (pos == static_cast<std::ptrdiff_t>(dests.size())) {
        if (dests.size() == kMaxSlots) throw std::length_error("too many destinations in one round");
        dests.push_back(m.dest);
        weight.push_back(0);
      }
      weight[pos] += m.item.weight;
      ctx.keep(laned(std::move(m.item), static_cast<std::uint8_t>(kHeld + pos)));
    }
    for (std::size_t s = 0; s < dests.size(); ++s) {
      ctx.keep(laned(Item::edge(dests[s]), static_cast<std::uint8_t>(kDest + s)));
      Item a = Item::edge(self);
      a.lane = kAnnounce;
      a.w[0] = static_cast<std::int64_t>(weight[s]);
      a.w[1] = static_cast<std::int64_t>(s);
      ctx.send(dests[s], a);
    }
    return;
  }

  for (auto& it : alg_in) ctx.keep(it);

  if (sub == 1) {
    for (auto& it : rest) ctx.keep(it);
    QueueState st = q.value_or(QueueState{});
    if (announces.size() > M / 4)
      throw SenderCountExceeded(self.to_string() + " has " + std::to_string(announces.size()) +
                                " senders in one round (limit " + std::to_string(M / 4) + ")");
    std::stable_sort(announces.begin(), announces.end(),
                     [](const Item* a, const Item* b) { return *a->link < *b->link; });
    const bool had_list = !st.empty();
    const bool head_drains = had_list && st.head == st.first;
    if (had_list) {
      Item dr = Item::edge(self);
      dr.lane = kDrain;
      ctx.send(list_label(self, st.first), dr);
    }
    // Group 0 goes to the head list node, or straight to the owner when the
    // list is empty or its only node drains this cycle.
    const bool direct0 = !had_list || head_drains;
    std::vector<std::uint64_t> counts;
    for (auto* a : announces) counts.push_back(static_cast<std::uint64_t>(a->w[0]));
    auto groups = group_senders(had_list ? st.n_head : 0, counts, M);
    const std::uint64_t first_new = st.next;
    std::uint64_t last_sum = direct0 ? 0 : st.n_head;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      NodeLabel target = g == 0 ? (direct0 ? self : list_label(self, st.head)) : list_label(self, st.next++);
      last_sum = g == 0 && !direct0 ? st.n_head : 0;
      for (auto pos : groups[g]) {
        last_sum += counts[pos];
        Item r = Item::edge(target);
        r.lane = kReply;
        r.w[0] = announces[pos]->w[1];
        ctx.send(*announces[pos]->link, r);
      }
    }
    const bool allocated = st.next != first_new;
    QueueState nq = st;
    if (had_list) nq.first = st.first + 1;
    if (allocated) {
      nq.head = st.next - 1;
      nq.n_head = last_sum;
      if (direct0) nq.first = first_new;
    } else if (direct0) {
      nq.head = 0;
      nq.first = 0;
      nq.n_head = 0;
    } else {
      nq.n_head = last_sum;
    }
    // A list that drained this cycle keeps its counter so labels stay unique.
    if (!nq.empty() || had_list) ctx.keep(queue_item(nq));
    return;
  }

  // sub == 2: ship held items to their assigned targets.
  if (q) ctx.keep(queue_item(*q));
  for (auto& it : rest) {
    if (it.lane >= kHeld) {
      auto slot = static_cast<std::uint64_t>(it.lane - kHeld);
      auto r = replies.find(slot);
      if (r == replies.end()) throw std::logic_error("held item without an assigned target");
      ctx.send(r->second, laned(it, kShipped));
    } else if (it.lane < kDest) {
      ctx.keep(it);
    }
  }
}

void list_node(NodeContext& ctx) {
  std::vector<Item> stored, fresh;
  const NodeLabel* owner = nullptr;
  for (auto& it : ctx.items()) {
    if (it.lane == kDrain)
      owner = it.link.get();
    else if (it.lane == kStored)
      stored.push_back(it);
    else
      fresh.push_back(it);
  }
  for (auto& it : fresh) stored.push_back(laned(std::move(it), kStored));
  for (auto& it : stored) {
    if (owner)
      ctx.send(*owner, laned(it, kDrained));
    else
      ctx.keep(it);
  }
}

}  // namespace

std::vector<std::vector<std::size_t>> group_senders(std::uint64_t n_head, std::span<const std::uint64_t> counts,
                                                    std::uint64_t M) {
  const std::uint64_t cap = M / 2;
  std::vector<std::vector<std::size_t>> groups;
  if (counts.empty()) return groups;
  groups.emplace_back();
  std::uint64_t sum = n_head;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > cap) throw std::invalid_argument("a sender's count exceeds M/2");
    if (sum + counts[i] > cap && (!groups.back().empty() || sum > 0)) {
      groups.emplace_back();
      sum = 0;
    }
    groups.back().push_back(i);
    sum += counts[i];
  }
  return groups;
}

NodeLabel list_label(const NodeLabel& owner, std::uint64_t counter) {
  return NodeLabel("fq", {owner.hash(), fnv1a(owner.to_string()), counter});
}

Algorithm wrap(const Algorithm& alg, std::uint64_t M) {
  if (M < 8) throw std::invalid_argument("the queue wrapper needs M >= 8");
  Algorithm w;
  w.name = "fifo(" + alg.name + ")";
  w.transition = [alg, M](NodeContext& ctx) {
    const std::uint64_t pr = ctx.phase_round();
    if (ctx.self().ns() == "fq")
      list_node(ctx);
    else
      real_node(ctx, alg, pr / 3, pr % 3, M);
  };
  w.done = [inner = alg.done](const PhaseView& v) {
    if (v.phase_rounds == 0 || v.phase_rounds % 3 != 0) return false;
    for (std::size_t i = 0; i < v.states.size(); ++i) {
      if (v.states.label(i).ns() == "fq") return false;
      for (auto& it : v.states.items(i))
        if (it.lane == kDrained || it.lane == kShipped) return false;
    }
    return !inner || inner(PhaseView{v.phase_rounds / 3, v.report, v.states});
  };
  return w;
}

std::vector<NodeState> unwrap_outputs(const std::vector<NodeState>& outputs) {
  std::vector<NodeState> out;
  for (auto& ns : outputs) {
    if (ns.label.ns() == "fq") continue;
    NodeState s{ns.label, {}};
    for (auto& it : ns.items)
      if (it.lane == kAlg) s.items.push_back(it);
    if (!s.items.empty()) out.push_back(std::move(s));
  }
  return out;
}

OccupancyReport check_occupancy(const StateView& states, std::uint64_t M) {
  OccupancyReport rep;
  std::set<NodeLabel> heads;
  for (std::size_t i = 0; i < states.size(); ++i)
    for (auto& it : states.items(i))
      if (it.lane == kQueue) {
        auto q = read_queue(it);
        if (!q.empty()) heads.insert(list_label(states.label(i), q.head));
      }
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states.label(i).ns() != "fq") continue;
    ++rep.list_nodes;
    std::uint64_t w = 0;
    for (auto& it : states.items(i))
      if (it.lane == kStored || it.lane == kShipped) w += it.weight;
    rep.buffered += w;
    if (!heads.count(states.label(i)) && (w < M / 4 || w > M / 2)) ++rep.out_of_range;
  }
  return rep;
}

}  // namespace mrsim
