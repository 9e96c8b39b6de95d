#include "mrsim/multisearch.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mrsim/fifoqueue.hpp"
#include "mrsim/prefix.hpp"

namespace mrsim {

std::uint64_t SearchDag::nodes_on_level(std::uint64_t l) const {
  // Only nodes whose range starts at a real pivot exist (node 0 always does).
  const std::uint64_t span = ipow(d, levels - l);
  return std::max<std::uint64_t>(1, (pivots.size() + span - 1) / span);
}

std::uint64_t SearchDag::total_copies() const {
  std::uint64_t t = 0;
  for (std::uint64_t l = 0; l < levels; ++l) t += nodes_on_level(l) * copies[l];
  return t;
}

std::uint64_t SearchDag::route(std::uint64_t l, std::uint64_t k, const Key& q) const {
  const std::uint64_t s = ipow(d, levels - l - 1);
  const std::uint64_t lo = k * s * d;
  for (std::uint64_t j = d - 1; j >= 1; --j) {
    std::uint64_t at = lo + j * s;
    if (at < pivots.size() && pivots[at] < q) return j;
  }
  return 0;
}

std::uint64_t SearchDag::leaf_rank(std::uint64_t k, const Key& q) const {
  const std::size_t lo = std::min<std::size_t>(k * d, pivots.size());
  const std::size_t hi = std::min<std::size_t>(lo + d, pivots.size());
  return std::lower_bound(pivots.begin() + lo, pivots.begin() + hi, q) - pivots.begin();
}

SearchDag build_search_dag(std::vector<Key> pivots, std::uint64_t M, std::uint64_t batch_size, std::uint64_t weight) {
  if (M < 8) throw std::invalid_argument("multi-search needs M >= 8");
  for (std::size_t i = 1; i < pivots.size(); ++i)
    if (!(pivots[i - 1] < pivots[i])) throw UnsortedPivots("pivots must be sorted and distinct");
  SearchDag g;
  g.d = M / 2;
  g.levels = std::max<std::uint64_t>(1, ceil_log(g.d, pivots.size()));
  g.batch_size = batch_size;
  g.pivots = std::move(pivots);
  const std::uint64_t quarter = M / 4;
  // A level-l node covers d^(levels-l) pivots and so expects that share of
  // the batch. For a complete tree the share is 1/d^l.
  const std::uint64_t np = std::max<std::size_t>(1, g.pivots.size());
  for (std::uint64_t l = 0; l < g.levels; ++l) {
    const std::uint64_t span = std::min(ipow(g.d, g.levels - l), np);
    const unsigned __int128 num = static_cast<unsigned __int128>(batch_size) * weight * span;
    const unsigned __int128 den = static_cast<unsigned __int128>(np) * quarter;
    g.copies.push_back(std::max<std::uint64_t>(1, static_cast<std::uint64_t>((num + den - 1) / den)));
  }
  return g;
}

SearchDag build_search_dag(std::span<const std::int64_t> pivots, std::uint64_t M, std::uint64_t batch_size,
                           std::uint64_t weight) {
  std::vector<Key> keys;
  for (auto p : pivots) keys.push_back({p, UINT64_MAX});
  return build_search_dag(std::move(keys), M, batch_size, weight);
}

std::uint64_t batch_count(std::uint64_t queries, std::uint64_t pivots, std::uint64_t M) {
  if (queries <= 1) return 1;
  if (pivots > 1) {
    const double lp = std::log(static_cast<double>(pivots)) / std::log(static_cast<double>(M));
    if (static_cast<double>(queries) <= static_cast<double>(pivots) / std::max(1.0, lp)) return 1;
  }
  return std::max<std::uint64_t>(1, ceil_log(M, queries));
}

namespace {

Item query_item(const QueryEntry& e) {
  Item it = Item::edge(e.reply);
  it.weight = kQueryWeight;
  it.w[0] = e.key.value;
  it.w[1] = static_cast<std::int64_t>(e.key.tie);
  it.w[2] = static_cast<std::int64_t>(e.dag);
  it.w[3] = static_cast<std::int64_t>(e.batch);
  return it;
}

}  // namespace

Algorithm search_algorithm(const SearchSpec& spec) {
  // Copy c of node (l, k) of DAG t is (ns, t, l, k * copies[l] + c).
  auto copy_label = [ns = spec.ns](const SearchDag& g, std::uint64_t t, std::uint64_t l, std::uint64_t k,
                                   Rng& rng) { return NodeLabel(ns, {t, l, k * g.copies[l] + rng.below(g.copies[l])}); };
  Algorithm a;
  a.name = spec.ns;
  a.transition = [spec, copy_label](NodeContext& ctx) {
    const auto& s = ctx.self();
    if (s.ns() != spec.ns) {
      for (auto& it : ctx.items()) ctx.keep(it);
      auto e = spec.subject ? spec.subject(ctx) : std::nullopt;
      if (e && e->batch == ctx.phase_round())
        ctx.send(copy_label(spec.dag(e->dag), e->dag, 0, 0, ctx.rng()), query_item(*e));
      return;
    }
    const std::uint64_t t = s[0], l = s[1];
    const SearchDag& g = spec.dag(t);
    const std::uint64_t k = s[2] / g.copies[l];
    for (auto& it : ctx.items()) {
      const Key q{it.w[0], static_cast<std::uint64_t>(it.w[1])};
      if (l + 1 == g.levels) {
        Item r = Item::make(ItemKind::Control, 1, static_cast<std::int64_t>(g.leaf_rank(k, q)));
        r.tag = kTagSearchRank;
        ctx.send(*it.link, r);
      } else {
        ctx.send(copy_label(g, t, l + 1, k * g.d + g.route(l, k, q), ctx.rng()), it);
      }
    }
  };
  a.done = [R = spec.rounds](const PhaseView& v) { return v.phase_rounds >= R; };
  return a;
}

MultiSearchResult multi_search(std::span<const std::int64_t> pivots, std::span<const std::int64_t> queries,
                               const EngineConfig& cfg, bool queued) {
  MultiSearchResult res;
  const std::uint64_t N = queries.size();
  const std::uint64_t b = batch_count(N, pivots.size(), cfg.M);
  const std::uint64_t batch_size = (N + b - 1) / b;
  res.dag = build_search_dag(pivots, cfg.M, batch_size, kQueryWeight);
  res.batches = b;
  if (N == 0) return res;

  std::set<NodeLabel> touched;
  EngineConfig ecfg = cfg;
  ecfg.observer = [&](const RoundView& rv) {
    for (std::size_t x = 0; x < rv.states.size(); ++x)
      if (rv.states.label(x).ns() == "ms") touched.insert(rv.states.label(x));
    if (cfg.observer) cfg.observer(rv);
  };

  Session session(ecfg);
  std::vector<Item> in;
  for (std::uint64_t i = 0; i < N; ++i) in.push_back(Item::value(static_cast<std::int64_t>(i), queries[i]));
  session.load_inputs(in);

  if (b > 1) {
    IndexingSpec ix;
    const auto g = indexing_geometry(N, cfg.M);
    ix.subject = [](const NodeContext& ctx) -> std::optional<std::uint64_t> {
      if (ctx.self().ns() == "in") return 0;
      return std::nullopt;
    };
    ix.geometry = [g](std::uint64_t) { return g; };
    ix.max_L = g.L;
    try {
      session.run(indexing_algorithm(ix));
    } catch (const BudgetViolation& e) {
      if (e.violation.node.ns() == ix.ns)
        throw LeafOverflow("leaf " + e.violation.node.to_string() + " received more than M requests", e.report);
      throw;
    }
    res.indexing_rounds = session.report().rounds;
  }

  SearchSpec sp;
  sp.dag = [&res](std::uint64_t) -> const SearchDag& { return res.dag; };
  sp.rounds = b + res.dag.levels;
  sp.subject = [b](const NodeContext& ctx) -> std::optional<QueryEntry> {
    if (ctx.self().ns() != "in") return std::nullopt;
    QueryEntry e;
    e.reply = ctx.self();
    bool query = false;
    for (auto& it : ctx.items()) {
      if (it.kind == ItemKind::Value) {
        e.key = {it.w[1], static_cast<std::uint64_t>(it.w[0])};
        query = true;
      } else if (it.kind == ItemKind::Control && it.tag == kTagRank) {
        e.batch = static_cast<std::uint64_t>(it.w[0]) % b;
      } else if (it.tag == kTagSearchRank) {
        return std::nullopt;
      }
    }
    if (!query) return std::nullopt;
    return e;
  };
  try {
    session.run(queued ? wrap(search_algorithm(sp), cfg.M) : search_algorithm(sp));
  } catch (const BudgetViolation& e) {
    if (e.violation.node.ns() == sp.ns)
      throw CopyOverload("DAG copy " + e.violation.node.to_string() + " over budget", e.violation.round,
                         e.violation.node, e.report);
    throw;
  }
  res.search_rounds = session.report().rounds - res.indexing_rounds;
  res.report = session.finish();
  res.dag_nodes = touched.size();
  res.ranks.assign(N, 0);
  for (auto& ns : res.report.outputs)
    if (ns.label.ns() == "in")
      for (auto& it : ns.items)
        if (it.tag == kTagSearchRank) res.ranks.at(ns.label[0]) = static_cast<std::uint64_t>(it.w[0]);
  return res;
}

}  // namespace mrsim
