#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mrsim/engine.hpp"

namespace mrsim {

struct BspMessage {
  std::uint64_t from = 0;
  std::int64_t value = 0;
  friend bool operator==(const BspMessage&, const BspMessage&) = default;
};

struct BspSend {
  std::uint64_t to = 0;
  std::int64_t value = 0;
};

struct BspStep {
  std::vector<std::int64_t> state;  // processor state and memory cells
  std::vector<BspSend> out;
};

using BspSuperstep = std::function<BspStep(std::uint64_t pid, std::uint64_t step, std::span<const std::int64_t> state,
                                           std::span<const BspMessage> inbox, Rng& rng)>;

struct BspProgram {
  std::uint64_t P = 1;
  std::function<std::vector<std::int64_t>(std::uint64_t pid)> init_state;
  BspSuperstep superstep;
  std::uint64_t supersteps = 0;
};

struct BspBudgetViolation : std::runtime_error {
  BspBudgetViolation(std::uint64_t proc, std::uint64_t step, const std::string& what)
      : std::runtime_error(what), processor(proc), superstep(step) {}
  std::uint64_t processor;
  std::uint64_t superstep;
};

struct BspResult {
  std::vector<std::vector<std::int64_t>> states;
  // Messages sent in the last superstep, not yet consumed.
  std::vector<std::vector<BspMessage>> inboxes;
  std::uint64_t M = 0;  // ceil(N / P)
  ExecutionReport report;
};

// M = ceil(N/P) with N the total state size. The engine node budget is 2M
// (state plus inbox) plus one header word, floored at 4. cfg.M is ignored.
BspResult simulate_bsp(const BspProgram& prog, const EngineConfig& cfg);
BspResult bsp_oracle(const BspProgram& prog, std::uint64_t seed);

BspProgram ring_shift_program(std::uint64_t P);
// Root value spreads from processor 0 with the given fan-out per superstep.
BspProgram tree_broadcast_program(std::uint64_t P, std::uint64_t fanout, std::int64_t root_value);

}  // namespace mrsim
