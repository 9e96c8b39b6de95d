#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string_view>

#include "mrsim/label.hpp"

namespace mrsim {

enum class ItemKind : std::uint8_t {
  Value,
  Query,
  ReadRequest,
  WriteRequest,
  PartialSum,
  Count,
  Edge,
  Control,
};

std::string_view kind_name(ItemKind k);

// A unit of data. Weight is counted in 64-bit words against the budget M.
struct Item {
  ItemKind kind = ItemKind::Value;
  // Reserved for protocol layers that wrap another algorithm's items.
  std::uint8_t lane = 0;
  std::uint16_t tag = 0;
  std::uint32_t weight = 1;
  std::array<std::int64_t, 4> w{};
  // Set only on Edge items.
  std::shared_ptr<const NodeLabel> link;

  static Item make(ItemKind kind, std::uint32_t weight, std::int64_t w0 = 0, std::int64_t w1 = 0,
                   std::int64_t w2 = 0, std::int64_t w3 = 0);
  static Item value(std::int64_t index, std::int64_t v) { return make(ItemKind::Value, 1, index, v); }
  static Item edge(const NodeLabel& target);

  Item& with_tag(std::uint16_t t) {
    tag = t;
    return *this;
  }

  friend bool operator==(const Item& a, const Item& b);
};

struct Message {
  NodeLabel dest;
  Item item;
  NodeLabel origin;
  std::uint64_t seq = 0;
};

}  // namespace mrsim
