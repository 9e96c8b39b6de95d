#include "mrsim/bruteforce.hpp"

#include <algorithm>

#include "mrsim/prefix.hpp"

namespace mrsim {

namespace {

Item copy_item(const BruteEntry& e) {
  Item it = Item::edge(e.reply);
  it.w[0] = e.key.value;
  it.w[1] = static_cast<std::int64_t>(e.key.tie);
  // Index and side share w[2]; w[3] is the size of the axis the copy spreads along.
  it.w[2] = static_cast<std::int64_t>(e.index << 1 | static_cast<std::uint64_t>(e.side));
  it.w[3] = static_cast<std::int64_t>(e.side == 0 ? e.m : e.n);
  return it;
}

int item_side(const Item& it) { return static_cast<int>(it.w[2] & 1); }
std::uint64_t item_index(const Item& it) { return static_cast<std::uint64_t>(it.w[2]) >> 1; }
std::uint64_t item_across(const Item& it) { return static_cast<std::uint64_t>(it.w[3]); }

Key item_key(const Item& it) { return {it.w[0], static_cast<std::uint64_t>(it.w[1])}; }

struct Names {
  std::string x, y, grid, row, col;
  explicit Names(const std::string& ns)
      : x(ns + ".x"), y(ns + ".y"), grid(ns + ".g"), row(ns + ".r"), col(ns + ".c") {}
};

}  // namespace

std::uint64_t replication_depth(std::uint64_t count, std::uint64_t M) { return ceil_log(M, count); }

std::uint64_t replication_rounds(std::uint64_t n, std::uint64_t m, std::uint64_t M) {
  return std::max({std::uint64_t{1}, replication_depth(m, M), replication_depth(n, M)});
}

std::uint64_t brute_phase_rounds(std::uint64_t n, std::uint64_t m, std::uint64_t M) {
  return replication_rounds(n, m, M) + std::max(tree_geometry(m, M).L, tree_geometry(n, M).L) + 1;
}

Algorithm brute_algorithm(const BruteSpec& spec, std::uint64_t M) {
  const Names nm(spec.ns);
  const std::uint64_t F = M;
  const std::uint64_t d = M / 2;

  // Send copies of x (side 0) or y (side 1) one level down the replication
  // tree. `a` is the item's own index, `b` its 1-based position at `level`.
  auto fan_out = [nm, F](NodeContext& ctx, const Item& it, std::uint64_t g, std::uint64_t a, std::uint64_t level,
                         std::uint64_t b) {
    const int side = item_side(it);
    const std::uint64_t across = item_across(it);
    const std::uint64_t A = replication_depth(across, F);
    auto grid = [&](std::uint64_t bb) {
      return side == 0 ? NodeLabel(nm.grid, {g, a, bb}) : NodeLabel(nm.grid, {g, bb, a});
    };
    if (A == 0) {
      ctx.send(grid(1), it);
      return;
    }
    const std::uint64_t span_below = ipow(F, A - level - 1);
    for (std::uint64_t k = 1; k <= F; ++k) {
      std::uint64_t bb = (b - 1) * F + k;
      if ((bb - 1) * span_below >= across) break;
      if (level + 1 == A)
        ctx.send(grid(bb), it);
      else
        ctx.send(NodeLabel(side == 0 ? nm.x : nm.y, {g, a, level + 1, bb}), it);
    }
  };

  Algorithm a;
  a.name = spec.ns;
  a.place = [spec, fan_out](NodeContext& ctx) {
    auto e = spec.subject ? spec.subject(ctx) : std::nullopt;
    if (!e) {
      for (auto& it : ctx.items()) ctx.keep(it);
      return;
    }
    fan_out(ctx, copy_item(*e), e->group, e->index, 0, 1);
  };
  a.transition = [spec, nm, fan_out, d, M](NodeContext& ctx) {
    const auto& s = ctx.self();
    auto items = ctx.items();
    const auto ns = s.ns();
    if (ns == nm.x || ns == nm.y) {
      for (auto& it : items) fan_out(ctx, it, s[0], s[1], s[2], s[3]);
      return;
    }
    if (ns == nm.grid) {
      const Item* x = nullptr;
      const Item* y = nullptr;
      for (auto& it : items) (item_side(it) == 0 ? x : y) = &it;
      if (!x || !y || spec.replicate_only) {
        for (auto& it : items) ctx.keep(it);
        return;
      }
      const std::uint64_t g = s[0], i = s[1], j = s[2];
      const std::uint64_t m = item_across(*x), n = item_across(*y);
      const std::int64_t bit = item_key(*y) < item_key(*x) ? 1 : 0;
      auto rg = tree_geometry(m, M), cg = tree_geometry(n, M);
      NodeLabel row(nm.row, {g, i, rg.L - 1, (j - 1) / d});
      NodeLabel col(nm.col, {g, j, cg.L - 1, (i - 1) / d});
      ctx.send(row, Item::make(ItemKind::PartialSum, 1, static_cast<std::int64_t>((j - 1) % d), bit));
      ctx.send(col, Item::make(ItemKind::PartialSum, 1, static_cast<std::int64_t>((i - 1) % d), bit));
      if (j == 1) ctx.send(row, *x);
      if (i == 1) ctx.send(col, *y);
      return;
    }
    if (ns == nm.row || ns == nm.col) {
      std::int64_t sum = 0;
      const Item* edge = nullptr;
      for (auto& it : items) {
        if (it.kind == ItemKind::PartialSum)
          sum += it.w[1];
        else
          edge = &it;
      }
      const std::uint64_t g = s[0], a2 = s[1], l = s[2], k = s[3];
      if (l == 0) {
        Item out = Item::make(ItemKind::Count, 1, sum);
        out.tag = ns == nm.row ? kTagBruteRank : kTagBruteCount;
        ctx.send(*edge->link, out);
        return;
      }
      NodeLabel up(ns, {g, a2, l - 1, k / d});
      ctx.send(up, Item::make(ItemKind::PartialSum, 1, static_cast<std::int64_t>(k % d), sum));
      if (edge) ctx.send(up, *edge);
      return;
    }
    for (auto& it : items) ctx.keep(it);
  };
  a.done = [R = spec.rounds](const PhaseView& v) { return v.phase_rounds >= R; };
  return a;
}

namespace {

// Standalone instances: x_i at ("in", i), y_j at ("in", n + j), one group.
BruteSpec standalone_spec(std::uint64_t n, std::uint64_t m) {
  BruteSpec spec;
  spec.subject = [n, m](const NodeContext& ctx) -> std::optional<BruteEntry> {
    if (ctx.self().ns() != "in") return std::nullopt;
    const Item& it = ctx.items()[0];
    const auto idx = static_cast<std::uint64_t>(it.w[0]);
    BruteEntry e;
    e.side = idx < n ? 0 : 1;
    const std::uint64_t pos = idx < n ? idx : idx - n;
    e.index = pos + 1;
    e.key = {it.w[1], pos};
    e.reply = ctx.self();
    e.n = n;
    e.m = m;
    return e;
  };
  return spec;
}

std::vector<Item> standalone_inputs(std::span<const std::int64_t> X, std::span<const std::int64_t> Y) {
  std::vector<Item> in;
  for (std::size_t i = 0; i < X.size(); ++i) in.push_back(Item::value(static_cast<std::int64_t>(i), X[i]));
  for (std::size_t j = 0; j < Y.size(); ++j)
    in.push_back(Item::value(static_cast<std::int64_t>(X.size() + j), Y[j]));
  return in;
}

}  // namespace

ReplicateResult replicate(std::uint64_t n, std::uint64_t m, const EngineConfig& cfg) {
  ReplicateResult res;
  if (n == 0 || m == 0) return res;
  auto spec = standalone_spec(n, m);
  spec.replicate_only = true;
  spec.rounds = replication_rounds(n, m, cfg.M);
  std::vector<std::int64_t> zeros(n + m, 0);
  auto in = standalone_inputs(std::span(zeros).first(n), std::span(zeros).subspan(n));
  res.report = run(brute_algorithm(spec, cfg.M), in, cfg);
  const std::string grid = spec.ns + ".g";
  for (auto& ns : res.report.outputs) {
    if (ns.label.ns() != grid) continue;
    bool x = false, y = false;
    for (auto& it : ns.items) {
      if (item_side(it) == 0 && item_index(it) == ns.label[1]) x = true;
      if (item_side(it) == 1 && item_index(it) == ns.label[2]) y = true;
    }
    if (x && y) ++res.populated;
  }
  res.complete = res.populated == n * m;
  return res;
}

BruteSearchResult brute_multisearch(std::span<const std::int64_t> X, std::span<const std::int64_t> Y,
                                    const EngineConfig& cfg) {
  BruteSearchResult res;
  const std::uint64_t n = X.size(), m = Y.size();
  res.k.assign(n, 0);
  res.c.assign(m, 0);
  if (n == 0 || m == 0) return res;
  auto spec = standalone_spec(n, m);
  spec.rounds = brute_phase_rounds(n, m, cfg.M);
  res.report = run(brute_algorithm(spec, cfg.M), standalone_inputs(X, Y), cfg);
  for (auto& ns : res.report.outputs) {
    if (ns.label.ns() != "in") continue;
    const std::uint64_t idx = ns.label[0];
    for (auto& it : ns.items) {
      if (it.tag == kTagBruteRank) res.k.at(idx) = static_cast<std::uint64_t>(it.w[0]);
      if (it.tag == kTagBruteCount) res.c.at(idx - n) = static_cast<std::uint64_t>(it.w[0]);
    }
  }
  return res;
}

BruteSortResult brute_sort(std::span<const std::int64_t> X, const EngineConfig& cfg) {
  auto r = brute_multisearch(X, X, cfg);
  return {std::move(r.k), std::move(r.report)};
}

std::vector<std::uint64_t> leaf_counts(std::span<const std::uint64_t> c) {
  std::vector<std::uint64_t> out(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) out[j] = c[j] - (j + 1 < c.size() ? c[j + 1] : 0);
  return out;
}

}  // namespace mrsim
