#include "mrsim/wordcount.hpp"

#include <stdexcept>

namespace mrsim {

namespace {

std::array<std::uint64_t, 4> pack(const std::string& word) {
  if (word.empty() || word.size() > kMaxWordBytes)
    throw std::invalid_argument("word must have 1.." + std::to_string(kMaxWordBytes) + " bytes");
  std::array<std::uint64_t, 4> c{};
  for (std::size_t i = 0; i < word.size(); ++i)
    c[i / 8] |= static_cast<std::uint64_t>(static_cast<unsigned char>(word[i])) << (56 - 8 * (i % 8));
  return c;
}

}  // namespace

NodeLabel word_label(const std::string& word) {
  auto c = pack(word);
  return NodeLabel("wc", std::span<const std::uint64_t>(c));
}

std::string label_word(const NodeLabel& l) {
  std::string s;
  for (std::size_t i = 0; i < l.arity(); ++i)
    for (int b = 0; b < 8; ++b) {
      char ch = static_cast<char>((l[i] >> (56 - 8 * b)) & 0xff);
      if (ch == 0) return s;
      s += ch;
    }
  return s;
}

std::vector<Item> wordcount_inputs(const std::vector<std::string>& tokens) {
  std::vector<Item> in;
  in.reserve(tokens.size());
  for (auto& t : tokens) {
    auto c = pack(t);
    Item it = Item::make(ItemKind::Value, 1);
    for (int k = 0; k < 4; ++k) it.w[k] = static_cast<std::int64_t>(c[k]);
    in.push_back(it);
  }
  return in;
}

Algorithm wordcount_algorithm() {
  Algorithm a;
  a.name = "wordcount";
  a.transition = [](NodeContext& ctx) {
    for (auto& it : ctx.items()) {
      std::array<std::uint64_t, 4> c;
      for (int k = 0; k < 4; ++k) c[k] = static_cast<std::uint64_t>(it.w[k]);
      ctx.send(NodeLabel("wc", std::span<const std::uint64_t>(c)), Item::make(ItemKind::Count, 1, 1));
    }
  };
  a.done = [](const PhaseView& v) { return v.phase_rounds >= 1; };
  a.finalize = [](const NodeLabel&, std::vector<Item>& items) {
    std::int64_t sum = 0;
    for (auto& it : items) sum += it.w[0];
    items.assign(1, Item::make(ItemKind::Count, 1, sum));
  };
  return a;
}

WordCountResult word_count(const std::vector<std::string>& tokens, const EngineConfig& cfg) {
  auto alg = wordcount_algorithm();
  WordCountResult r;
  r.report = run(alg, wordcount_inputs(tokens), cfg);
  for (auto& ns : r.report.outputs) r.counts[label_word(ns.label)] = ns.items.at(0).w[0];
  return r;
}

}  // namespace mrsim
