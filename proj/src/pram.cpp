#include "mrsim/pram.hpp"

#include <algorithm>
#include <set>

namespace mrsim {

namespace {

constexpr std::uint16_t kTagState = 1;    // (register, pending read address or -1), weight 2
constexpr std::uint16_t kTagMem = 2;      // memory word held by the funnel root
constexpr std::uint16_t kTagReadVal = 3;  // value travelling down a funnel
constexpr std::uint16_t kTagBitmap = 4;   // children that requested a read
constexpr std::uint16_t kTagWrite = 5;    // write value, address implied by the funnel

NodeLabel proc(std::uint64_t i) { return NodeLabel("pp", {i}); }
NodeLabel funnel(std::uint64_t j, std::uint64_t l, std::uint64_t k) { return NodeLabel("pf", {j, l, k}); }

std::int64_t combine_checked(Combine c, std::int64_t a, std::int64_t b) {
  if (c == Combine::Sum) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw CombineOverflow("Sum combine overflows 64-bit range");
    return r;
  }
  return c == Combine::Min ? std::min(a, b) : std::max(a, b);
}

void check_addr(std::uint64_t a, std::uint64_t N) {
  if (a >= N) throw AddressOutOfRange("address " + std::to_string(a) + " outside memory of " + std::to_string(N));
}

std::uint64_t bitmap_weight(std::uint64_t d) { return (d + 63) / 64; }

Item make_bitmap(const std::vector<std::uint64_t>& slots, std::uint64_t d) {
  Item b = Item::make(ItemKind::Control, static_cast<std::uint32_t>(bitmap_weight(d)));
  b.tag = kTagBitmap;
  for (auto s : slots) b.w[s / 64] |= static_cast<std::int64_t>(std::uint64_t{1} << (s % 64));
  return b;
}

void bitmap_slots(const Item& b, std::vector<std::uint64_t>& out) {
  for (std::uint64_t s = 0; s < 256; ++s)
    if (static_cast<std::uint64_t>(b.w[s / 64]) >> (s % 64) & 1) out.push_back(s);
}

std::vector<std::int64_t> normalized_states(const PramProgram& p) {
  auto s = p.init_state;
  s.resize(p.P, 0);
  return s;
}

std::vector<std::optional<std::uint64_t>> normalized_reads(const PramProgram& p) {
  auto r = p.first_read;
  r.resize(p.P, std::nullopt);
  return r;
}

}  // namespace

std::string_view combine_name(Combine c) {
  switch (c) {
    case Combine::Sum: return "sum";
    case Combine::Min: return "min";
    case Combine::Max: return "max";
  }
  return "?";
}

std::optional<Combine> parse_combine(std::string_view s) {
  if (s == "sum") return Combine::Sum;
  if (s == "min") return Combine::Min;
  if (s == "max") return Combine::Max;
  return std::nullopt;
}

std::int64_t apply_combine(Combine c, std::int64_t a, std::int64_t b) { return combine_checked(c, a, b); }

TreeGeometry funnel_geometry(std::uint64_t P, std::uint64_t M) {
  auto g = tree_geometry(P, M);
  if (g.d > 256) throw std::invalid_argument("funnel bitmaps support M <= 512");
  return g;
}

PramResult pram_oracle(const PramProgram& prog) {
  PramResult res;
  res.memory = prog.memory;
  res.states = normalized_states(prog);
  auto reads = normalized_reads(prog);
  const std::uint64_t N = prog.memory.size();
  for (std::uint64_t t = 0; t < prog.T; ++t) {
    std::vector<std::optional<std::int64_t>> got(prog.P);
    for (std::uint64_t i = 0; i < prog.P; ++i)
      if (reads[i]) {
        check_addr(*reads[i], N);
        got[i] = res.memory[*reads[i]];
      }
    std::vector<std::optional<std::int64_t>> written(N);
    for (std::uint64_t i = 0; i < prog.P; ++i) {
      auto act = prog.step(i, t, res.states[i], got[i]);
      res.states[i] = act.state;
      reads[i] = act.next_read;
      if (act.write) {
        auto [a, v] = *act.write;
        check_addr(a, N);
        written[a] = written[a] ? combine_checked(prog.combine, *written[a], v) : v;
      }
    }
    for (std::uint64_t j = 0; j < N; ++j)
      if (written[j]) res.memory[j] = *written[j];
  }
  return res;
}

PramResult simulate_pram(const PramProgram& prog, const EngineConfig& cfg) {
  const std::uint64_t P = prog.P, N = prog.memory.size();
  if (P == 0) throw std::invalid_argument("PRAM program needs at least one processor");
  const auto g = funnel_geometry(P, cfg.M);
  const std::uint64_t L = g.L, d = g.d;
  const std::uint64_t per_step = 3 * L + 1;
  const Combine comb = prog.combine;

  PramResult res;
  res.funnel = g;
  res.requests_per_step.assign(prog.T, 0);
  res.active_labels_per_step.assign(prog.T, 0);

  Algorithm a;
  a.name = "pram";
  a.place = [](NodeContext& ctx) {
    const Item& it = ctx.items()[0];
    if (it.tag == kTagMem)
      ctx.send(funnel(static_cast<std::uint64_t>(it.w[0]), 0, 0), it);
    else
      ctx.send(proc(static_cast<std::uint64_t>(it.w[2])), Item::make(ItemKind::Value, 2, it.w[0], it.w[1]).with_tag(kTagState));
  };
  a.transition = [&prog, L, d, N, per_step, comb](NodeContext& ctx) {
    const std::uint64_t pr = ctx.phase_round() - 1;
    const std::uint64_t t = pr / per_step, r = pr % per_step;
    const auto& self = ctx.self();
    auto items = ctx.items();

    if (self.ns() == "pp") {
      const std::uint64_t i = self[0];
      const Item* st = nullptr;
      std::optional<std::int64_t> got;
      for (auto& it : items) {
        if (it.tag == kTagState) st = &it;
        if (it.tag == kTagReadVal) got = it.w[0];
      }
      if (r == 0 && st->w[1] >= 0) {
        auto addr = static_cast<std::uint64_t>(st->w[1]);
        check_addr(addr, N);
        ctx.send(funnel(addr, L - 1, i / d), Item::make(ItemKind::ReadRequest, 1, static_cast<std::int64_t>(i % d)));
      }
      if (r != 2 * L) {
        for (auto& it : items) ctx.keep(it);
        return;
      }
      auto act = prog.step(i, t, st->w[0], got);
      std::int64_t next = act.next_read ? static_cast<std::int64_t>(*act.next_read) : -1;
      if (act.next_read) check_addr(*act.next_read, N);
      ctx.keep(Item::make(ItemKind::Value, 2, act.state, next).with_tag(kTagState));
      if (act.write) {
        check_addr(act.write->first, N);
        Item w = Item::make(ItemKind::WriteRequest, 1, act.write->second);
        w.tag = kTagWrite;
        ctx.send(funnel(act.write->first, L - 1, i / d), w);
      }
      return;
    }

    // Funnel node (j, l, k); level 0 is the memory root.
    const std::uint64_t j = self[0], l = self[1], k = self[2];
    std::vector<std::uint64_t> slots;
    std::optional<std::int64_t> mem, down, wr;
    for (auto& it : items) {
      if (it.kind == ItemKind::ReadRequest) slots.push_back(static_cast<std::uint64_t>(it.w[0]));
      else if (it.tag == kTagBitmap) bitmap_slots(it, slots);
      else if (it.tag == kTagMem) mem = it.w[1];
      else if (it.tag == kTagReadVal) down = it.w[0];
      else if (it.tag == kTagWrite) wr = wr ? combine_checked(comb, *wr, it.w[0]) : it.w[0];
    }
    auto keep_mem = [&](std::int64_t v) { ctx.keep(Item::make(ItemKind::Value, 1, static_cast<std::int64_t>(j), v).with_tag(kTagMem)); };

    if (r >= 1 && r <= L - 1 && l == L - r && !slots.empty()) {
      // Coalesce read requests upward.
      std::sort(slots.begin(), slots.end());
      ctx.keep(make_bitmap(slots, d));
      ctx.send(funnel(j, l - 1, k / d), Item::make(ItemKind::ReadRequest, 1, static_cast<std::int64_t>(k % d)));
      return;
    }
    if (r >= L && r <= 2 * L - 1 && l == r - L && !slots.empty()) {
      std::int64_t v = l == 0 ? *mem : *down;
      if (l == 0) keep_mem(*mem);
      Item out = Item::make(ItemKind::Value, 1, v);
      out.tag = kTagReadVal;
      for (auto s : slots) ctx.send(l == L - 1 ? proc(k * d + s) : funnel(j, l + 1, k * d + s), out);
      return;
    }
    if (r >= 2 * L + 1 && l == 3 * L - r && wr) {
      if (l == 0)
        keep_mem(*wr);
      else {
        Item w = Item::make(ItemKind::PartialSum, 1, *wr);
        w.tag = kTagWrite;
        ctx.send(funnel(j, l - 1, k / d), w);
      }
      return;
    }
    for (auto& it : items) ctx.keep(it);
  };
  a.done = [T = prog.T, per_step](const PhaseView& v) { return v.phase_rounds >= 1 + T * per_step; };

  // Distinct labels alive during each step, and requests issued per step.
  std::vector<std::set<NodeLabel>> seen(prog.T);
  EngineConfig ecfg = cfg;
  ecfg.observer = [&](const RoundView& rv) {
    // rv.states are the inputs of round rv.round + 1, i.e. phase round rv.round.
    const std::uint64_t t = rv.round / per_step, r = rv.round % per_step;
    if (t < prog.T) {
      auto& s = seen[t];
      for (std::size_t x = 0; x < rv.states.size(); ++x) {
        s.insert(rv.states.label(x));
        for (auto& it : rv.states.items(x))
          if ((r == 1 && it.kind == ItemKind::ReadRequest && rv.states.label(x).ns() == "pf" &&
               rv.states.label(x)[1] == L - 1) ||
              (r == 2 * L + 1 && it.kind == ItemKind::WriteRequest))
            ++res.requests_per_step[t];
      }
    }
    if (cfg.observer) cfg.observer(rv);
  };

  std::vector<Item> inputs;
  for (std::uint64_t jj = 0; jj < N; ++jj)
    inputs.push_back(Item::value(static_cast<std::int64_t>(jj), prog.memory[jj]).with_tag(kTagMem));
  auto st = normalized_states(prog);
  auto rd = normalized_reads(prog);
  for (std::uint64_t i = 0; i < P; ++i) {
    if (rd[i]) check_addr(*rd[i], N);
    inputs.push_back(Item::make(ItemKind::Value, 1, st[i], rd[i] ? static_cast<std::int64_t>(*rd[i]) : -1,
                                static_cast<std::int64_t>(i)));
  }
  res.report = run(a, inputs, ecfg);
  for (std::uint64_t t = 0; t < prog.T; ++t) res.active_labels_per_step[t] = seen[t].size();

  res.memory = prog.memory;
  res.states.assign(P, 0);
  for (auto& ns : res.report.outputs)
    for (auto& it : ns.items) {
      if (it.tag == kTagMem) res.memory.at(static_cast<std::size_t>(it.w[0])) = it.w[1];
      if (it.tag == kTagState) res.states.at(ns.label[0]) = it.w[0];
    }
  return res;
}

PramProgram sum_reduce_program(std::vector<std::int64_t> values) {
  PramProgram p;
  const std::uint64_t n = values.size();
  p.P = std::max<std::uint64_t>(1, n);
  p.memory = std::move(values);
  p.memory.push_back(0);
  p.T = 1;
  p.combine = Combine::Sum;
  for (std::uint64_t i = 0; i < n; ++i) p.first_read.push_back(i);
  p.step = [n](std::uint64_t, std::uint64_t, std::int64_t s, std::optional<std::int64_t> got) {
    PramAction a;
    a.state = s;
    if (got) a.write = {{n, *got}};
    return a;
  };
  return p;
}

PramProgram histogram_program(std::uint64_t P, std::uint64_t cells) {
  PramProgram p;
  p.P = P;
  p.memory.assign(cells, 0);
  p.T = 1;
  p.combine = Combine::Sum;
  p.step = [cells](std::uint64_t i, std::uint64_t, std::int64_t s, std::optional<std::int64_t>) {
    PramAction a;
    a.state = s;
    a.write = {{i % cells, 1}};
    return a;
  };
  return p;
}

PramProgram max_scan_program(std::vector<std::int64_t> values) {
  PramProgram p;
  const std::uint64_t n = values.size();
  p.P = std::max<std::uint64_t>(1, n);
  p.memory = values;
  p.init_state = values;
  p.combine = Combine::Max;
  std::uint64_t T = 0;
  while ((std::uint64_t{1} << T) < n) ++T;
  p.T = T;
  for (std::uint64_t i = 0; i < n; ++i) p.first_read.push_back(i >= 1 ? std::optional<std::uint64_t>(i - 1) : std::nullopt);
  p.step = [](std::uint64_t i, std::uint64_t t, std::int64_t s, std::optional<std::int64_t> got) {
    PramAction a;
    a.state = got ? std::max(s, *got) : s;
    a.write = {{i, a.state}};
    std::uint64_t jump = std::uint64_t{1} << (t + 1);
    if (i >= jump) a.next_read = i - jump;
    return a;
  };
  return p;
}

PramProgram random_pram_program(std::uint64_t P, std::uint64_t N_mem, std::uint64_t T, Combine c, std::uint64_t seed) {
  PramProgram p;
  p.P = P;
  p.T = T;
  p.combine = c;
  Rng rng(seed);
  for (std::uint64_t j = 0; j < N_mem; ++j) p.memory.push_back(rng.range(-1000, 1000));
  for (std::uint64_t i = 0; i < P; ++i) {
    p.init_state.push_back(rng.range(0, 99));
    p.first_read.push_back(rng.chance(7, 8) ? std::optional<std::uint64_t>(rng.below(N_mem)) : std::nullopt);
  }
  p.step = [seed, N_mem](std::uint64_t i, std::uint64_t t, std::int64_t s, std::optional<std::int64_t> got) {
    Rng r(mix64(seed ^ mix64(i * 1315423911u + t)) ^ static_cast<std::uint64_t>(s) ^
          (got ? static_cast<std::uint64_t>(*got) * 0x9e37u : 0x55u));
    PramAction a;
    a.state = (s * 7 + got.value_or(3)) % 100003;
    if (r.chance(7, 8)) a.next_read = r.below(N_mem);
    if (r.chance(7, 8)) a.write = {{r.below(N_mem), r.range(-1000, 1000) + a.state % 17}};
    return a;
  };
  return p;
}

}  // namespace mrsim
