#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrsim/engine.hpp"

namespace mrsim {

// A d-ary tree with internal levels 0..L-1 (root (0,0)). Level L-1 nodes are
// the leaves that aggregate up to d elements each; element i sits at (L, i).
struct TreeGeometry {
  std::uint64_t d = 2;
  std::uint64_t L = 1;
};

// d = M/2 and the smallest L >= 1 with d^L >= n.
TreeGeometry tree_geometry(std::uint64_t n, std::uint64_t M);

struct TreePos {
  std::uint64_t level;
  std::uint64_t index;
  friend bool operator==(const TreePos&, const TreePos&) = default;
};

TreePos parent_pos(TreePos p, const TreeGeometry& g);
std::vector<TreePos> child_pos(TreePos p, const TreeGeometry& g);

struct PrefixOverflow : std::overflow_error {
  using std::overflow_error::overflow_error;
};

struct LeafOverflow : std::runtime_error {
  LeafOverflow(const std::string& what, ExecutionReport r) : std::runtime_error(what), report(std::move(r)) {}
  ExecutionReport report;
};

inline constexpr std::uint16_t kTagOffset = 0x7001;
inline constexpr std::uint16_t kTagRank = 0x7002;

struct PrefixResult {
  std::vector<std::int64_t> sums;  // inclusive
  TreeGeometry geometry;
  ExecutionReport report;
};

PrefixResult prefix_sums(std::span<const std::int64_t> values, const EngineConfig& cfg);

// Random indexing as a reusable phase. Nodes for which subject() returns a
// tree id request an index in that tree; each tree t has geometry(t). On
// completion the requesting node holds a Control item tagged rank_tag with
// its 0-based rank in w[0]. All other items stay where they are.
struct IndexingSpec {
  std::string ns = "ri";
  std::function<std::optional<std::uint64_t>(const NodeContext&)> subject;
  std::function<TreeGeometry(std::uint64_t tree)> geometry;
  std::uint64_t max_L = 1;
  std::uint16_t rank_tag = kTagRank;
};

// Geometry for indexing n_hat^3 slots: d = M/2, L = ceil(log_d n_hat^3).
TreeGeometry indexing_geometry(std::uint64_t n_hat, std::uint64_t M);
Algorithm indexing_algorithm(const IndexingSpec& spec);
std::uint64_t indexing_rank(std::span<const Item> items, std::uint16_t rank_tag = kTagRank);

struct IndexingResult {
  std::vector<std::uint64_t> ranks;  // ranks[i] for input i
  TreeGeometry geometry;
  ExecutionReport report;
};

IndexingResult random_indexing(std::size_t n, std::uint64_t n_hat, const EngineConfig& cfg);

}  // namespace mrsim
