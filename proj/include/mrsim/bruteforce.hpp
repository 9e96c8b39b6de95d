#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mrsim/engine.hpp"

namespace mrsim {

// Totally ordered search key: value first, then a tie breaker (usually the
// original index) so duplicates still get distinct ranks.
struct Key {
  std::int64_t value = 0;
  std::uint64_t tie = 0;
  friend auto operator<=>(const Key&, const Key&) = default;
};

inline constexpr std::uint16_t kTagBruteRank = 0x7101;   // k_i, delivered to the reply label of x_i
inline constexpr std::uint16_t kTagBruteCount = 0x7102;  // c_j, delivered to the reply label of y_j

// One participant of a brute-force phase. Indices are 1-based within their
// group and side (0 = query x, 1 = target y).
struct BruteEntry {
  std::uint64_t group = 0;
  int side = 0;
  std::uint64_t index = 1;
  Key key;
  NodeLabel reply;
  std::uint64_t n = 1, m = 1;  // group dimensions
};

// A brute-force all-pairs phase over any number of independent groups.
// Subject nodes hand their items over to the phase (nothing is kept there);
// every other node outside the phase namespace keeps its items.
struct BruteSpec {
  std::string ns = "bf";
  std::function<std::optional<BruteEntry>(const NodeContext&)> subject;
  std::uint64_t rounds = 1;  // phase length, see brute_phase_rounds
  bool replicate_only = false;
};

// Replication depth per axis: the smallest A with M^A >= count, so 0 when count = 1.
std::uint64_t replication_depth(std::uint64_t count, std::uint64_t M);
// Rounds until every grid node holds both its x and its y copy (>= 1).
std::uint64_t replication_rounds(std::uint64_t n, std::uint64_t m, std::uint64_t M);
// Replication, one compare round, aggregation, reply.
std::uint64_t brute_phase_rounds(std::uint64_t n, std::uint64_t m, std::uint64_t M);

Algorithm brute_algorithm(const BruteSpec& spec, std::uint64_t M);

struct ReplicateResult {
  std::uint64_t populated = 0;  // grid nodes holding both copies
  bool complete = false;        // every v(i,j) holds x_i and y_j
  ExecutionReport report;
};

ReplicateResult replicate(std::uint64_t n, std::uint64_t m, const EngineConfig& cfg);

struct BruteSearchResult {
  std::vector<std::uint64_t> k;  // k_i = #{j : (y_j, j) < (x_i, i)}
  std::vector<std::uint64_t> c;  // c_j = #{i : (x_i, i) > (y_j, j)}
  ExecutionReport report;
};

// Ties are broken by the 0-based position within X and within Y.
BruteSearchResult brute_multisearch(std::span<const std::int64_t> X, std::span<const std::int64_t> Y,
                                    const EngineConfig& cfg);

struct BruteSortResult {
  std::vector<std::uint64_t> ranks;
  ExecutionReport report;
};

BruteSortResult brute_sort(std::span<const std::int64_t> X, const EngineConfig& cfg);

// Per-target counts c_j - c_{j+1} with c_{m+1} = 0.
std::vector<std::uint64_t> leaf_counts(std::span<const std::uint64_t> c);

}  // namespace mrsim
