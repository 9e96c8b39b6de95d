#include "mrsim/samplesort.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "mrsim/bruteforce.hpp"
#include "mrsim/multisearch.hpp"
#include "mrsim/prefix.hpp"

namespace mrsim {

namespace {

constexpr std::uint16_t kElem = 0x7301;    // w0 = original index, w1 = value
constexpr std::uint16_t kSub = 0x7302;     // w0 = instance id (its first output rank), w1 = size
constexpr std::uint16_t kFinal = 0x7303;   // w0 = output rank
constexpr std::uint16_t kInfo = 0x7304;    // w0 = bucket offset within the parent, w1 = bucket size
constexpr std::uint16_t kUp = 0x7305;      // w0 = slot, w1 = count
constexpr std::uint16_t kOffset = 0x7306;  // w0 = offset
constexpr std::uint16_t kTotal = 0x7307;   // w0 = bucket size

constexpr int kMaxDepth = 48;

NodeLabel home_label(std::uint64_t idx) { return NodeLabel("ss.item", {idx}); }

std::string part(std::uint64_t depth, const char* name) { return "s" + std::to_string(depth) + "." + name; }

Item ctrl(std::uint16_t tag, std::int64_t a, std::int64_t b = 0) {
  return Item::make(ItemKind::Control, 1, a, b).with_tag(tag);
}

struct Home {
  const Item* elem = nullptr;
  std::uint64_t sub = 0, n = 0;
  const Item* info = nullptr;
  std::optional<std::uint64_t> rho, pivot_rank, bucket;
  bool final = false;

  Key key() const { return {elem->w[1], static_cast<std::uint64_t>(elem->w[0])}; }
  std::uint64_t idx() const { return static_cast<std::uint64_t>(elem->w[0]); }
};

Home read_home(std::span<const Item> items) {
  Home h;
  for (auto& it : items) {
    if (it.kind == ItemKind::Control && it.tag == kTagRank) {
      h.rho = static_cast<std::uint64_t>(it.w[0]);
      continue;
    }
    switch (it.tag) {
      case kElem: h.elem = &it; break;
      case kSub:
        h.sub = static_cast<std::uint64_t>(it.w[0]);
        h.n = static_cast<std::uint64_t>(it.w[1]);
        break;
      case kInfo: h.info = &it; break;
      case kFinal: h.final = true; break;
      case kTagBruteRank: h.pivot_rank = static_cast<std::uint64_t>(it.w[0]); break;
      case kTagSearchRank: h.bucket = static_cast<std::uint64_t>(it.w[0]); break;
      default: break;
    }
  }
  return h;
}

// Instance of a home after the previous level's bucket info is applied.
std::pair<std::uint64_t, std::uint64_t> next_instance(const Home& h, const std::set<std::uint64_t>& resample) {
  if (!h.info || resample.count(h.sub)) return {h.sub, h.n};
  return {h.sub + static_cast<std::uint64_t>(h.info->w[0]), static_cast<std::uint64_t>(h.info->w[1])};
}

void keep_all(NodeContext& ctx) {
  for (auto& it : ctx.items()) ctx.keep(it);
}

bool active(const Home& h, std::uint64_t M) { return h.elem && !h.final && h.n > M; }

// Applies bucket info and sorts every instance of size <= M at one node.
Algorithm level_start(std::uint64_t depth, std::uint64_t M, std::set<std::uint64_t> resample, bool base) {
  Algorithm a;
  a.name = part(depth, "start");
  const std::string base_ns = part(depth, "base");
  a.transition = [=](NodeContext& ctx) {
    const auto& s = ctx.self();
    if (s.ns() == base_ns) {
      std::vector<const Item*> v;
      for (auto& it : ctx.items()) v.push_back(&it);
      std::sort(v.begin(), v.end(), [](const Item* x, const Item* y) {
        return std::pair(x->w[0], x->w[1]) < std::pair(y->w[0], y->w[1]);
      });
      for (std::size_t i = 0; i < v.size(); ++i)
        ctx.send(*v[i]->link, ctrl(kFinal, static_cast<std::int64_t>(s[0] + i)));
      return;
    }
    if (s.ns() != "ss.item" || ctx.phase_round() != 0) return keep_all(ctx);
    const Home h = read_home(ctx.items());
    if (!h.elem || h.final) return keep_all(ctx);
    auto [sub, n] = next_instance(h, resample);
    ctx.keep(*h.elem);
    ctx.keep(ctrl(kSub, static_cast<std::int64_t>(sub), static_cast<std::int64_t>(n)));
    if (n <= M) {
      Item e = Item::edge(s);
      e.w[0] = h.elem->w[1];
      e.w[1] = h.elem->w[0];
      ctx.send(NodeLabel(base_ns, {sub}), e);
    }
  };
  a.done = [base](const PhaseView& v) { return v.phase_rounds >= (base ? 2u : 1u); };
  return a;
}

// Sampled homes (rank < ceil(sqrt n)) hand their key to an x and a y proxy.
Algorithm to_proxies(std::uint64_t depth, std::uint64_t M) {
  Algorithm a;
  a.name = part(depth, "proxy");
  const std::string px = part(depth, "px"), py = part(depth, "py");
  a.transition = [=](NodeContext& ctx) {
    keep_all(ctx);
    if (ctx.self().ns() != "ss.item") return;
    const Home h = read_home(ctx.items());
    if (!active(h, M) || !h.rho || *h.rho >= pivot_count(h.n)) return;
    Item it = Item::make(ItemKind::Value, 1, h.elem->w[0], h.elem->w[1], static_cast<std::int64_t>(h.n));
    ctx.send(NodeLabel(px, {h.sub, *h.rho}), it);
    ctx.send(NodeLabel(py, {h.sub, *h.rho}), it);
  };
  a.done = [](const PhaseView& v) { return v.phase_rounds >= 1; };
  return a;
}

// Per instance: count every bucket with a funnel over the random ranks,
// prefix the counts over the bucket ids, and send (offset, size) back down.
struct BucketShape {
  std::uint64_t d, Lf, Lb;
  std::uint64_t down() const { return Lf + 2 * Lb; }
  std::uint64_t rounds() const { return down() + Lf; }
};

Algorithm bucket_phase(std::uint64_t depth, std::uint64_t M, BucketShape g) {
  Algorithm a;
  a.name = part(depth, "bucket");
  const std::string fns = part(depth, "f"), bns = part(depth, "b");
  a.transition = [=](NodeContext& ctx) {
    const auto& s = ctx.self();
    const std::uint64_t r = ctx.phase_round();
    const std::uint64_t d = g.d;
    if (s.ns() == "ss.item") {
      const Home h = read_home(ctx.items());
      if (r != 0 || !active(h, M)) return keep_all(ctx);
      if (!h.bucket || !h.rho) throw std::logic_error("sample sort: home without bucket or rank");
      ctx.keep(*h.elem);
      ctx.keep(ctrl(kSub, static_cast<std::int64_t>(h.sub), static_cast<std::int64_t>(h.n)));
      ctx.send(NodeLabel(fns, {h.sub, *h.bucket, g.Lf - 1, *h.rho / d}), Item::edge(s));
      return;
    }
    if (s.ns() == fns) {
      const std::uint64_t sub = s[0], B = s[1], l = s[2], k = s[3];
      const bool leaf = l + 1 == g.Lf;
      if (r == g.Lf - l) {
        std::int64_t total = 0;
        for (auto& it : ctx.items()) {
          ctx.keep(it);
          total += leaf ? 1 : it.w[1];
        }
        Item up = Item::make(ItemKind::PartialSum, 1, 0, total).with_tag(kUp);
        if (l > 0) {
          up.w[0] = static_cast<std::int64_t>(k % d);
          ctx.send(NodeLabel(fns, {sub, B, l - 1, k / d}), up);
        } else {
          ctx.keep(ctrl(kTotal, total));
          up.w[0] = static_cast<std::int64_t>(B % d);
          ctx.send(NodeLabel(bns, {sub, g.Lb - 1, B / d}), up);
        }
        return;
      }
      if (r != g.down() + l) return keep_all(ctx);
      std::int64_t off = 0, n = 0;
      std::vector<const Item*> kids;
      for (auto& it : ctx.items()) {
        if (it.tag == kOffset) off = it.w[0];
        else if (it.tag == kTotal) n = it.w[0];
        else if (it.tag == kInfo) off = it.w[0], n = it.w[1];
        else kids.push_back(&it);
      }
      const Item info = ctrl(kInfo, off, n);
      for (auto* kid : kids) {
        if (leaf)
          ctx.send(*kid->link, info);
        else
          ctx.send(NodeLabel(fns, {sub, B, l + 1, k * d + static_cast<std::uint64_t>(kid->w[0])}), info);
      }
      return;
    }
    if (s.ns() == bns) {
      const std::uint64_t sub = s[0], l = s[1], k = s[2];
      const bool up = r == g.Lf + g.Lb - l;
      const bool down = r == g.Lf + g.Lb + l;
      if (!up && !down) return keep_all(ctx);
      std::vector<const Item*> kids;
      std::int64_t off = 0, total = 0;
      for (auto& it : ctx.items()) {
        if (it.tag == kOffset)
          off = it.w[0];
        else
          kids.push_back(&it), total += it.w[1];
      }
      if (up && l > 0) {
        keep_all(ctx);
        ctx.send(NodeLabel(bns, {sub, l - 1, k / d}),
                 Item::make(ItemKind::PartialSum, 1, static_cast<std::int64_t>(k % d), total).with_tag(kUp));
        return;
      }
      std::sort(kids.begin(), kids.end(), [](const Item* x, const Item* y) { return x->w[0] < y->w[0]; });
      for (auto* kid : kids) {
        const std::uint64_t child = k * d + static_cast<std::uint64_t>(kid->w[0]);
        const NodeLabel dest = l + 1 == g.Lb ? NodeLabel(fns, {sub, child, 0, 0}) : NodeLabel(bns, {sub, l + 1, child});
        ctx.send(dest, ctrl(kOffset, off));
        off += kid->w[1];
      }
      return;
    }
    keep_all(ctx);
  };
  a.done = [g](const PhaseView& v) { return v.phase_rounds >= g.rounds(); };
  return a;
}

template <class F>
void for_homes(const StateView& st, F&& f) {
  for (std::size_t i = 0; i < st.size(); ++i)
    if (st.label(i).ns() == "ss.item") f(read_home(st.items(i)));
}

void run_phase(Session& s, const Algorithm& a, const std::string& search_ns, const std::string& index_ns) {
  try {
    s.run(a);
  } catch (const BudgetViolation& e) {
    if (e.violation.node.ns() == search_ns)
      throw CopyOverload("DAG copy " + e.violation.node.to_string() + " over budget", e.violation.round,
                         e.violation.node, e.report);
    if (e.violation.node.ns() == index_ns)
      throw LeafOverflow("leaf " + e.violation.node.to_string() + " received more than M requests", e.report);
    throw;
  }
}

}  // namespace

std::uint64_t pivot_count(std::uint64_t n) {
  std::uint64_t s = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
  while (s * s < n) ++s;
  while (s > 1 && (s - 1) * (s - 1) >= n) --s;
  return std::max<std::uint64_t>(s, 1);
}

SampleSortResult sample_sort(std::span<const std::int64_t> X, const EngineConfig& cfg, const SampleSortOptions& opt) {
  const std::uint64_t M = cfg.M;
  if (M < 8) throw std::invalid_argument("sample sort needs M >= 8");
  const std::uint64_t N = X.size();
  SampleSortResult res;
  res.ranks.assign(N, 0);
  if (N == 0) return res;

  Session session(cfg);
  std::vector<NodeState> init;
  init.reserve(N);
  for (std::uint64_t i = 0; i < N; ++i)
    init.push_back({home_label(i),
                    {Item::value(static_cast<std::int64_t>(i), X[i]).with_tag(kElem),
                     ctrl(kSub, 0, static_cast<std::int64_t>(N))}});
  session.load_states(std::move(init));

  std::set<std::uint64_t> resample;
  std::map<std::uint64_t, std::uint64_t> attempts;
  for (std::uint64_t depth = 0;; ++depth) {
    if (depth >= static_cast<std::uint64_t>(kMaxDepth)) throw std::runtime_error("sample sort: recursion too deep");
    SampleSortLevel lv;
    const std::uint64_t start_round = session.report().rounds;
    std::set<std::uint64_t> bases, subs;
    for_homes(session.states(), [&](const Home& h) {
      if (!h.elem || h.final) return;
      auto [sub, n] = next_instance(h, resample);
      (n <= M ? bases : subs).insert(sub);
      lv.max_n = std::max(lv.max_n, n);
    });
    if (bases.empty() && subs.empty()) break;
    lv.base_cases = bases.size();
    lv.subproblems = subs.size();
    session.run(level_start(depth, M, resample, !bases.empty()));
    resample.clear();
    if (subs.empty()) {
      lv.rounds = session.report().rounds - start_round;
      res.levels.push_back(lv);
      continue;
    }
    ++res.depth;

    std::uint64_t n_max = 0;
    std::map<std::uint64_t, std::uint64_t> size_of;
    for_homes(session.states(), [&](const Home& h) {
      if (!active(h, M)) return;
      size_of[h.sub] = h.n;
      n_max = std::max(n_max, h.n);
    });
    const std::uint64_t s_max = pivot_count(n_max);
    const std::string search_ns = part(depth, "ms"), index_ns = part(depth, "ri");

    IndexingSpec ix;
    ix.ns = index_ns;
    const auto ig = indexing_geometry(n_max, M);
    ix.subject = [M](const NodeContext& ctx) -> std::optional<std::uint64_t> {
      if (ctx.self().ns() != "ss.item") return std::nullopt;
      const Home h = read_home(ctx.items());
      if (!active(h, M)) return std::nullopt;
      return h.sub;
    };
    ix.geometry = [ig](std::uint64_t) { return ig; };
    ix.max_L = ig.L;
    run_phase(session, indexing_algorithm(ix), search_ns, index_ns);

    session.run(to_proxies(depth, M));

    BruteSpec bs;
    bs.ns = part(depth, "bf");
    const std::string px = part(depth, "px"), py = part(depth, "py");
    bs.subject = [px, py](const NodeContext& ctx) -> std::optional<BruteEntry> {
      const auto& s = ctx.self();
      if (s.ns() != px && s.ns() != py) return std::nullopt;
      const Item& it = ctx.items()[0];
      BruteEntry e;
      e.group = s[0];
      e.side = s.ns() == px ? 0 : 1;
      e.index = s[1] + 1;
      e.key = {it.w[1], static_cast<std::uint64_t>(it.w[0])};
      e.reply = home_label(static_cast<std::uint64_t>(it.w[0]));
      e.n = e.m = pivot_count(static_cast<std::uint64_t>(it.w[2]));
      return e;
    };
    bs.rounds = brute_phase_rounds(s_max, s_max, M);
    session.run(brute_algorithm(bs, M));

    // The sorted pivots of every instance become its search structure.
    std::map<std::uint64_t, std::vector<Key>> pivots;
    for (auto& [sub, n] : size_of) pivots[sub].assign(pivot_count(n), Key{});
    for_homes(session.states(), [&](const Home& h) {
      if (active(h, M) && h.pivot_rank) pivots.at(h.sub).at(*h.pivot_rank) = h.key();
    });
    std::map<std::uint64_t, SearchDag> dags;
    std::uint64_t b_max = 1, levels_max = 1;
    for (auto& [sub, n] : size_of) {
      const std::uint64_t b = batch_count(n, pivots[sub].size(), M);
      auto& g = dags[sub] = build_search_dag(std::move(pivots[sub]), M, (n + b - 1) / b, kQueryWeight);
      b_max = std::max(b_max, b);
      levels_max = std::max(levels_max, g.levels);
    }

    SearchSpec sp;
    sp.ns = search_ns;
    sp.dag = [&dags](std::uint64_t t) -> const SearchDag& { return dags.at(t); };
    sp.rounds = b_max + levels_max;
    sp.subject = [M, &dags](const NodeContext& ctx) -> std::optional<QueryEntry> {
      if (ctx.self().ns() != "ss.item") return std::nullopt;
      const Home h = read_home(ctx.items());
      if (!active(h, M) || h.bucket || !h.rho) return std::nullopt;
      const auto& g = dags.at(h.sub);
      QueryEntry e;
      e.dag = h.sub;
      e.key = h.key();
      e.batch = *h.rho % batch_count(h.n, g.pivots.size(), M);
      e.reply = ctx.self();
      return e;
    };
    run_phase(session, search_algorithm(sp), search_ns, index_ns);

    for_homes(session.states(), [&](const Home& h) {
      if (!active(h, M)) return;
      const auto& p = dags.at(h.sub).pivots;
      const std::uint64_t B = h.bucket.value();
      const Key k = h.key();
      if ((B > 0 && !(p[B - 1] < k)) || (B < p.size() && p[B] < k)) ++lv.unsound;
    });

    const auto fg = tree_geometry(n_max, M);
    const BucketShape shape{fg.d, fg.L, tree_geometry(s_max + 1, M).L};
    session.run(bucket_phase(depth, M, shape));

    std::map<std::uint64_t, std::uint64_t> biggest;
    for_homes(session.states(), [&](const Home& h) {
      if (!active(h, M) || !h.info) return;
      auto& b = biggest[h.sub];
      b = std::max(b, static_cast<std::uint64_t>(h.info->w[1]));
    });
    for (auto& [sub, b] : biggest) {
      lv.max_bucket = std::max(lv.max_bucket, b);
      const double n = static_cast<double>(size_of.at(sub));
      if (static_cast<double>(b) > opt.oversize_factor * std::sqrt(n) * std::log2(n) &&
          attempts[sub]++ < opt.max_resamples) {
        resample.insert(sub);
        ++lv.resampled;
      }
    }
    lv.rounds = session.report().rounds - start_round;
    res.levels.push_back(lv);
  }

  res.report = session.finish();
  std::vector<bool> seen(N, false);
  for (auto& ns : res.report.outputs) {
    if (ns.label.ns() != "ss.item") continue;
    for (auto& it : ns.items)
      if (it.tag == kFinal) {
        res.ranks.at(ns.label[0]) = static_cast<std::uint64_t>(it.w[0]);
        seen[ns.label[0]] = true;
      }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw std::logic_error("sample sort: an item has no rank");
  return res;
}

}  // namespace mrsim
