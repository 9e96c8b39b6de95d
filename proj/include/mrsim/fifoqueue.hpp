#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mrsim/engine.hpp"

namespace mrsim {

struct SenderCountExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Greedy left-to-right packing of {head, u_1, ..., u_k} into groups of total
// weight <= M/2. Group 0 starts with the head's n_head items; the returned
// groups list sender positions in order.
std::vector<std::vector<std::size_t>> group_senders(std::uint64_t n_head, std::span<const std::uint64_t> counts,
                                                    std::uint64_t M);

// Label of the counter-th buffer list node of owner.
NodeLabel list_label(const NodeLabel& owner, std::uint64_t counter);

// Turns an algorithm for the modified framework into one that runs under the
// strict budget M. Every round of alg becomes a cycle of three rounds:
//   1. alg's f runs on kept items plus one buffered batch; senders announce
//      their per-destination counts and hold the items;
//   2. owners pack announcements into buffer list nodes and reply with the
//      label each sender ships to; the oldest list node is told to drain;
//   3. senders ship, the oldest list node drains into its owner.
// Per node and round alg may keep at most M/8 words, send at most M/4 words
// and receive from at most M/4 senders. The wrapped run ends at the first
// cycle boundary with no buffered items anywhere at which alg.done (if set)
// holds for the number of completed cycles.
Algorithm wrap(const Algorithm& alg, std::uint64_t M);

// Items of the wrapped run that belong to alg (wrapper bookkeeping removed).
std::vector<NodeState> unwrap_outputs(const std::vector<NodeState>& outputs);

struct OccupancyReport {
  std::uint64_t list_nodes = 0;
  std::uint64_t out_of_range = 0;  // non-head list nodes outside [M/4, M/2]
  std::uint64_t buffered = 0;      // items held by list nodes
};

// Meaningful at cycle boundaries of a wrapped run.
OccupancyReport check_occupancy(const StateView& states, std::uint64_t M);

}  // namespace mrsim
