#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrsim/bruteforce.hpp"
#include "mrsim/engine.hpp"

namespace mrsim {

struct UnsortedPivots : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CopyOverload : std::runtime_error {
  CopyOverload(const std::string& what, std::uint64_t r, NodeLabel n, ExecutionReport rep)
      : std::runtime_error(what), round(r), node(std::move(n)), report(std::move(rep)) {}
  std::uint64_t round;
  NodeLabel node;
  ExecutionReport report;
};

inline constexpr std::uint16_t kTagSearchRank = 0x7201;

// d-ary search tree over the pivots where every level-l node exists in
// copies[l] interchangeable copies. Routing is a pure function of the pivots,
// so copies hold no state between rounds.
struct SearchDag {
  std::vector<Key> pivots;
  std::uint64_t d = 2;
  std::uint64_t levels = 1;
  std::vector<std::uint64_t> copies;
  std::uint64_t batch_size = 0;

  std::uint64_t nodes_on_level(std::uint64_t l) const;
  std::uint64_t total_copies() const;
  // Index of the child of (l, k) a query descends to.
  std::uint64_t route(std::uint64_t l, std::uint64_t k, const Key& q) const;
  // Rank of q among the pivots, evaluated at leaf-level node k.
  std::uint64_t leaf_rank(std::uint64_t k, const Key& q) const;
};

// copies[l] = max(1, ceil(batch_size * weight * share_l / (M/4))) where share_l is the
// fraction of pivots under one level-l node (1/d^l for a complete tree).
SearchDag build_search_dag(std::vector<Key> pivots, std::uint64_t M, std::uint64_t batch_size,
                           std::uint64_t weight = 1);
SearchDag build_search_dag(std::span<const std::int64_t> pivots, std::uint64_t M, std::uint64_t batch_size,
                           std::uint64_t weight = 1);

// Query items weigh 3 words: key, tie and original index plus batch id.
inline constexpr std::uint32_t kQueryWeight = 3;

struct QueryEntry {
  std::uint64_t dag = 0;
  Key key;
  std::uint64_t batch = 0;
  NodeLabel reply;
};

// Pipelined search phase. Each node outside the phase namespace is asked for
// its query every round and injects it when the phase round equals its batch;
// nodes keep all their items. Every query answer is a Control item tagged
// kTagSearchRank sent to the query's reply label.
struct SearchSpec {
  std::string ns = "ms";
  std::function<std::optional<QueryEntry>(const NodeContext&)> subject;
  std::function<const SearchDag&(std::uint64_t)> dag;
  std::uint64_t rounds = 1;  // batches + max levels
};

Algorithm search_algorithm(const SearchSpec& spec);

// Number of batches: ceil(log_M N), or 1 when queries <= pivots / log_M pivots.
std::uint64_t batch_count(std::uint64_t queries, std::uint64_t pivots, std::uint64_t M);

struct MultiSearchResult {
  std::vector<std::uint64_t> ranks;  // #{pivots < q}
  SearchDag dag;
  std::uint64_t batches = 0;
  std::uint64_t indexing_rounds = 0;
  std::uint64_t search_rounds = 0;
  std::uint64_t dag_nodes = 0;  // distinct DAG copies that ever held a query
  ExecutionReport report;
};

// With queued set, the search phase runs under the FIFO wrapper, so an
// overloaded copy buffers its queries instead of failing.
MultiSearchResult multi_search(std::span<const std::int64_t> pivots, std::span<const std::int64_t> queries,
                               const EngineConfig& cfg, bool queued = false);

}  // namespace mrsim
