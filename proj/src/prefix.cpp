#include "mrsim/prefix.hpp"

#include <algorithm>

namespace mrsim {

namespace {

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw PrefixOverflow("prefix sum exceeds the 64-bit range");
  return r;
}

using LabelFn = std::function<NodeLabel(std::uint64_t level, std::uint64_t index)>;

// Leaf behaviour of a scan tree. sum() condenses the leaf's element items;
// emit() receives them together with the offset of everything to the left.
struct LeafHooks {
  std::function<std::int64_t(std::span<const Item>)> sum;
  std::function<void(NodeContext&, std::vector<Item>&, std::int64_t)> emit;
};

// One round of the bottom-up / top-down schedule. Round r = 1..L-1 moves
// sums up from level L-r; round r = L..2L-1 moves offsets down from level r-L.
void tree_round(NodeContext& ctx, const TreeGeometry& g, std::uint64_t l, std::uint64_t k, std::uint64_t r,
                const LabelFn& label, const LeafHooks& leaf) {
  auto items = ctx.items();
  const std::uint64_t L = g.L;
  const bool up = r >= 1 && r + l == L && r <= L - 1;
  const bool down = r >= L && l == r - L;
  if (!up && !down) {
    for (auto& it : items) ctx.keep(it);
    return;
  }
  std::vector<Item> elems;
  std::vector<std::pair<std::uint64_t, std::int64_t>> kids;
  std::int64_t offset = 0;
  for (auto& it : items) {
    if (it.kind == ItemKind::PartialSum)
      kids.emplace_back(static_cast<std::uint64_t>(it.w[0]), it.w[1]);
    else if (it.kind == ItemKind::Control && it.tag == kTagOffset)
      offset = it.w[0];
    else
      elems.push_back(it);
  }
  if (up) {
    std::int64_t s = 0;
    if (l == L - 1)
      s = leaf.sum(elems);
    else
      for (auto& [slot, v] : kids) s = checked_add(s, v);
    auto p = parent_pos({l, k}, g);
    ctx.send(label(p.level, p.index),
             Item::make(ItemKind::PartialSum, 1, static_cast<std::int64_t>(k % g.d), s));
    for (auto& it : items) ctx.keep(it);
    return;
  }
  if (l == L - 1) {
    leaf.emit(ctx, elems, offset);
    return;
  }
  std::sort(kids.begin(), kids.end());
  for (auto& [slot, v] : kids) {
    Item o = Item::make(ItemKind::Control, 1, offset);
    o.tag = kTagOffset;
    ctx.send(label(l + 1, k * g.d + slot), o);
    offset = checked_add(offset, v);
  }
}

}  // namespace

TreeGeometry tree_geometry(std::uint64_t n, std::uint64_t M) {
  TreeGeometry g;
  g.d = M / 2;
  if (g.d < 2) throw std::invalid_argument("M must be at least 4");
  g.L = std::max<std::uint64_t>(1, ceil_log(g.d, n));
  return g;
}

TreePos parent_pos(TreePos p, const TreeGeometry& g) {
  if (p.level < 1 || p.level > g.L) throw std::invalid_argument("parent of a node outside levels 1..L");
  return {p.level - 1, p.index / g.d};
}

std::vector<TreePos> child_pos(TreePos p, const TreeGeometry& g) {
  if (p.level >= g.L) throw std::invalid_argument("element nodes have no children");
  std::vector<TreePos> out;
  for (std::uint64_t j = 0; j < g.d; ++j) out.push_back({p.level + 1, p.index * g.d + j});
  return out;
}

PrefixResult prefix_sums(std::span<const std::int64_t> values, const EngineConfig& cfg) {
  PrefixResult res;
  const auto g = tree_geometry(values.size(), cfg.M);
  res.geometry = g;
  LabelFn label = [](std::uint64_t l, std::uint64_t k) { return NodeLabel("px", {l, k}); };
  LeafHooks leaf;
  leaf.sum = [](std::span<const Item> el) {
    std::int64_t s = 0;
    for (auto& it : el) s = checked_add(s, it.w[1]);
    return s;
  };
  leaf.emit = [g](NodeContext& ctx, std::vector<Item>& el, std::int64_t offset) {
    std::sort(el.begin(), el.end(), [](const Item& a, const Item& b) { return a.w[0] < b.w[0]; });
    for (auto& it : el) {
      offset = checked_add(offset, it.w[1]);
      ctx.send(NodeLabel("px", {g.L, static_cast<std::uint64_t>(it.w[0])}), Item::value(it.w[0], offset));
    }
  };

  Algorithm a;
  a.name = "prefix";
  a.place = [g](NodeContext& ctx) {
    auto i = ctx.self()[0];
    ctx.send(NodeLabel("px", {g.L - 1, i / g.d}), ctx.items()[0]);
  };
  a.transition = [g, label, leaf](NodeContext& ctx) {
    const auto& s = ctx.self();
    if (s[0] == g.L) {
      for (auto& it : ctx.items()) ctx.keep(it);
      return;
    }
    tree_round(ctx, g, s[0], s[1], ctx.phase_round(), label, leaf);
  };
  a.done = [g](const PhaseView& v) { return v.phase_rounds >= 2 * g.L; };

  std::vector<Item> in;
  in.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) in.push_back(Item::value(static_cast<std::int64_t>(i), values[i]));
  res.report = run(a, in, cfg);
  res.sums.assign(values.size(), 0);
  std::vector<bool> seen(values.size(), false);
  for (auto& ns : res.report.outputs) {
    if (ns.label.ns() != "px" || ns.label[0] != g.L) continue;
    for (auto& it : ns.items) {
      auto i = static_cast<std::size_t>(it.w[0]);
      res.sums.at(i) = it.w[1];
      seen[i] = true;
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw std::logic_error("prefix sums: an output node is missing");
  return res;
}

TreeGeometry indexing_geometry(std::uint64_t n_hat, std::uint64_t M) {
  if (n_hat == 0) n_hat = 1;
  if (n_hat > 2642245) throw std::invalid_argument("n_hat^3 must fit in 64 bits");
  return tree_geometry(n_hat * n_hat * n_hat, M);
}

std::uint64_t indexing_rank(std::span<const Item> items, std::uint16_t rank_tag) {
  for (auto& it : items)
    if (it.kind == ItemKind::Control && it.tag == rank_tag) return static_cast<std::uint64_t>(it.w[0]);
  throw std::logic_error("node holds no rank");
}

Algorithm indexing_algorithm(const IndexingSpec& spec) {
  Algorithm a;
  a.name = "random-indexing";
  auto label = [ns = spec.ns](std::uint64_t t, std::uint64_t l, std::uint64_t k) { return NodeLabel(ns, {t, l, k}); };
  a.place = [spec, label](NodeContext& ctx) {
    for (auto& it : ctx.items()) ctx.keep(it);
    auto t = spec.subject ? spec.subject(ctx) : std::nullopt;
    if (!t) return;
    auto g = spec.geometry(*t);
    std::uint64_t leaves = ipow(g.d, g.L - 1);
    ctx.send(label(*t, g.L - 1, ctx.rng().below(leaves)), Item::edge(ctx.self()));
  };
  a.transition = [spec, label](NodeContext& ctx) {
    const auto& s = ctx.self();
    if (s.ns() != spec.ns) {
      for (auto& it : ctx.items()) ctx.keep(it);
      return;
    }
    const std::uint64_t t = s[0];
    auto g = spec.geometry(t);
    const std::uint64_t r = ctx.phase_round();
    LeafHooks leaf;
    leaf.sum = [](std::span<const Item> el) { return static_cast<std::int64_t>(el.size()); };
    leaf.emit = [&spec](NodeContext& c, std::vector<Item>& el, std::int64_t offset) {
      c.rng().shuffle(std::span<Item>(el));
      for (auto& it : el) {
        Item rk = Item::make(ItemKind::Control, 1, offset++);
        rk.tag = spec.rank_tag;
        c.send(*it.link, rk);
      }
    };
    tree_round(ctx, g, s[1], s[2], r, [&](std::uint64_t l, std::uint64_t k) { return label(t, l, k); }, leaf);
  };
  a.done = [L = spec.max_L](const PhaseView& v) { return v.phase_rounds >= 2 * L; };
  return a;
}

IndexingResult random_indexing(std::size_t n, std::uint64_t n_hat, const EngineConfig& cfg) {
  if (n_hat < n) throw std::invalid_argument("n_hat must be at least n");
  IndexingResult res;
  const auto g = indexing_geometry(n_hat, cfg.M);
  res.geometry = g;
  IndexingSpec spec;
  spec.subject = [](const NodeContext& ctx) -> std::optional<std::uint64_t> {
    if (ctx.self().ns() == "in") return 0;
    return std::nullopt;
  };
  spec.geometry = [g](std::uint64_t) { return g; };
  spec.max_L = g.L;
  auto alg = indexing_algorithm(spec);
  std::vector<Item> in;
  for (std::size_t i = 0; i < n; ++i) in.push_back(Item::value(static_cast<std::int64_t>(i), 0));
  try {
    res.report = run(alg, in, cfg);
  } catch (const BudgetViolation& e) {
    if (e.violation.node.ns() == spec.ns)
      throw LeafOverflow("leaf " + e.violation.node.to_string() + " received more than M requests", e.report);
    throw;
  }
  res.ranks.assign(n, 0);
  for (auto& ns : res.report.outputs)
    if (ns.label.ns() == "in") res.ranks.at(ns.label[0]) = indexing_rank(ns.items);
  return res;
}

}  // namespace mrsim
