#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>

namespace mrsim {

// Node identity: a short namespace plus up to four integer coordinates.
// Ordered by namespace, then coordinates lexicographically.
class NodeLabel {
 public:
  static constexpr std::size_t kMaxNamespace = 15;
  static constexpr std::size_t kMaxCoords = 4;

  NodeLabel() = default;
  NodeLabel(std::string_view ns, std::initializer_list<std::uint64_t> coords);
  NodeLabel(std::string_view ns, std::span<const std::uint64_t> coords);

  std::string_view ns() const;
  std::size_t arity() const { return arity_; }
  std::uint64_t operator[](std::size_t i) const { return coords_[i]; }
  std::span<const std::uint64_t> coords() const { return {coords_.data(), arity_}; }

  std::string to_string() const;
  std::uint64_t hash() const;

  friend bool operator==(const NodeLabel&, const NodeLabel&) = default;
  friend std::strong_ordering operator<=>(const NodeLabel& a, const NodeLabel& b);

 private:
  void set_ns(std::string_view ns);

  std::array<char, kMaxNamespace + 1> ns_{};
  std::uint8_t arity_ = 0;
  std::array<std::uint64_t, kMaxCoords> coords_{};
};

}  // namespace mrsim
