#include "mrsim/label.hpp"

#include <cstring>
#include <stdexcept>

#include "mrsim/item.hpp"
#include "mrsim/rng.hpp"

namespace mrsim {

NodeLabel::NodeLabel(std::string_view ns, std::initializer_list<std::uint64_t> coords)
    : NodeLabel(ns, std::span<const std::uint64_t>(coords.begin(), coords.size())) {}

NodeLabel::NodeLabel(std::string_view ns, std::span<const std::uint64_t> coords) {
  set_ns(ns);
  if (coords.size() > kMaxCoords) throw std::invalid_argument("label has more than 4 coordinates");
  arity_ = static_cast<std::uint8_t>(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) coords_[i] = coords[i];
}

void NodeLabel::set_ns(std::string_view ns) {
  if (ns.empty() || ns.size() > kMaxNamespace)
    throw std::invalid_argument("label namespace must have 1..15 characters");
  std::memcpy(ns_.data(), ns.data(), ns.size());
}

std::string_view NodeLabel::ns() const { return {ns_.data(), std::strlen(ns_.data())}; }

std::strong_ordering operator<=>(const NodeLabel& a, const NodeLabel& b) {
  int c = std::memcmp(a.ns_.data(), b.ns_.data(), a.ns_.size());
  if (c != 0) return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
  std::size_t n = std::min(a.arity_, b.arity_);
  for (std::size_t i = 0; i < n; ++i)
    if (a.coords_[i] != b.coords_[i]) return a.coords_[i] <=> b.coords_[i];
  return a.arity_ <=> b.arity_;
}

std::string NodeLabel::to_string() const {
  std::string s(ns());
  s += '(';
  for (std::size_t i = 0; i < arity_; ++i) {
    if (i) s += ',';
    s += std::to_string(coords_[i]);
  }
  s += ')';
  return s;
}

std::uint64_t NodeLabel::hash() const {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  std::uint64_t a = 0, b = 0;
  std::memcpy(&a, ns_.data(), 8);
  std::memcpy(&b, ns_.data() + 8, 8);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ arity_);
  for (std::size_t i = 0; i < arity_; ++i) h = mix64(h ^ coords_[i]);
  return h;
}

std::string_view kind_name(ItemKind k) {
  switch (k) {
    case ItemKind::Value: return "Value";
    case ItemKind::Query: return "Query";
    case ItemKind::ReadRequest: return "ReadRequest";
    case ItemKind::WriteRequest: return "WriteRequest";
    case ItemKind::PartialSum: return "PartialSum";
    case ItemKind::Count: return "Count";
    case ItemKind::Edge: return "Edge";
    case ItemKind::Control: return "Control";
  }
  return "?";
}

Item Item::make(ItemKind kind, std::uint32_t weight, std::int64_t w0, std::int64_t w1,
                std::int64_t w2, std::int64_t w3) {
  Item it;
  it.kind = kind;
  it.weight = weight;
  it.w = {w0, w1, w2, w3};
  return it;
}

Item Item::edge(const NodeLabel& target) {
  Item it = make(ItemKind::Edge, 1);
  it.link = std::make_shared<const NodeLabel>(target);
  return it;
}

bool operator==(const Item& a, const Item& b) {
  if (a.kind != b.kind || a.lane != b.lane || a.tag != b.tag || a.weight != b.weight || a.w != b.w)
    return false;
  if (bool(a.link) != bool(b.link)) return false;
  return !a.link || *a.link == *b.link;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, const NodeLabel& label, std::uint64_t round)
    : state_(mix64(mix64(seed ^ 0x243f6a8885a308d3ULL) ^ label.hash()) ^ mix64(round)) {}

std::uint64_t Rng::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below with zero bound");
  // Lemire's multiply-shift with rejection.
  unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < bound) {
    std::uint64_t t = -bound % bound;
    while (lo < t) {
      m = static_cast<unsigned __int128>(next()) * bound;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::int64_t Rng::range(std::int64_t lo, std::int64_t hi) {
  auto span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(next());
  return lo + static_cast<std::int64_t>(below(span));
}

}  // namespace mrsim
