#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrsim/item.hpp"
#include "mrsim/label.hpp"
#include "mrsim/rng.hpp"

namespace mrsim {

enum class Mode { Strict, Modified };

struct Violation {
  std::uint64_t round = 0;
  NodeLabel node;
  std::string direction;  // "out", "in" or "senders"
  std::uint64_t weight = 0;
};

struct RoundStats {
  std::uint64_t round = 0;
  std::uint64_t sent = 0;      // total weight of B(r), keeps included
  std::uint64_t external = 0;  // weight sent to a different node
  std::uint64_t active_nodes = 0;
  std::uint64_t max_in = 0;
  std::uint64_t max_out = 0;
  std::uint64_t f_time = 0;    // max over nodes of input plus output weight, or of received weight
  std::uint64_t buffered = 0;  // modified mode: weight left in input buffers
  std::uint64_t budget = 0;
};

struct NodeState {
  NodeLabel label;
  std::vector<Item> items;
  friend bool operator==(const NodeState&, const NodeState&) = default;
};

struct PhaseMark {
  std::string name;
  std::uint64_t first_round = 0;
  std::uint64_t rounds = 0;
};

struct ExecutionReport {
  std::uint64_t rounds = 0;
  std::uint64_t total_communication = 0;
  std::vector<RoundStats> per_round;
  std::vector<Violation> violations;
  std::vector<PhaseMark> phases;
  std::vector<NodeState> outputs;

  const NodeState* find_output(const NodeLabel& l) const;
};

struct EngineError : std::runtime_error {
  EngineError(const std::string& what, ExecutionReport partial)
      : std::runtime_error(what), report(std::move(partial)) {}
  ExecutionReport report;
};

struct BudgetViolation : EngineError {
  BudgetViolation(const Violation& v, ExecutionReport partial);
  Violation violation;
};

struct RoundLimitExceeded : EngineError {
  using EngineError::EngineError;
};

struct MalformedMessage : EngineError {
  using EngineError::EngineError;
};

class StateStore;

// Read-only view of the node states between rounds.
class StateView {
 public:
  explicit StateView(const StateStore& s) : s_(&s) {}
  std::size_t size() const;
  const NodeLabel& label(std::size_t i) const;
  std::span<const Item> items(std::size_t i) const;
  std::optional<std::size_t> find(const NodeLabel& l) const;
  std::vector<NodeState> copy() const;

 private:
  const StateStore* s_;
};

struct RoundView {
  std::uint64_t round;
  const RoundStats& stats;
  StateView states;  // states after routing, i.e. A(round + 1)
};

struct EngineConfig {
  std::uint64_t M = 64;
  std::uint64_t seed = 42;
  Mode mode = Mode::Strict;
  std::uint64_t round_limit = 0;  // 0 selects the default formula
  unsigned threads = 1;
  std::function<void(const RoundView&)> observer;
};

class NodeContext {
 public:
  const NodeLabel& self() const { return *self_; }
  std::uint64_t round() const { return round_; }
  std::uint64_t phase_round() const { return phase_round_; }
  std::uint64_t budget() const { return budget_; }
  std::uint64_t seed() const { return seed_; }
  std::span<const Item> items() const { return items_; }

  void send(const NodeLabel& dest, Item item);
  void keep(Item item) { send(*self_, std::move(item)); }
  Rng& rng();

  // Runs f as this node at the given round over `items` and returns what
  // it sent instead of routing it. Keeps appear with dest == self().
  std::vector<Message> invoke(const std::function<void(NodeContext&)>& f, std::span<const Item> items,
                              std::uint64_t round) const;

  struct Envelope;

 private:
  friend class Session;
  NodeContext() = default;

  const NodeLabel* self_ = nullptr;
  std::uint64_t round_ = 0;
  std::uint64_t phase_round_ = 0;
  std::uint64_t budget_ = 0;
  std::uint64_t seed_ = 0;
  std::span<const Item> items_;
  void* out_ = nullptr;
  std::uint32_t origin_ = 0;
  std::uint64_t out_weight_ = 0;
  std::uint64_t ext_weight_ = 0;
  std::optional<Rng> rng_;
};

using Transition = std::function<void(NodeContext&)>;

struct PhaseView {
  std::uint64_t phase_rounds;  // rounds completed in this phase
  const ExecutionReport& report;
  StateView states;
};

struct Algorithm {
  std::string name;
  Transition place;  // used for the first round of the phase when set
  Transition transition;
  // Checked before each round. Without it the phase runs until quiescent.
  std::function<bool(const PhaseView&)> done;
  // Local reduction applied to each final state. Not a round.
  std::function<void(const NodeLabel&, std::vector<Item>&)> finalize;
  std::uint64_t budget = 0;  // 0 uses the session M
};

// Runs one or more phases over a persistent set of node states.
class Session {
 public:
  explicit Session(EngineConfig cfg);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  // Input i becomes the sole item of node (input_ns, i).
  void load_inputs(std::span<const Item> inputs, std::string_view input_ns = "in");
  void load_states(std::vector<NodeState> states);

  void run(const Algorithm& alg);
  // Moves the final states into the report, applying finalize if given.
  ExecutionReport finish(const std::function<void(const NodeLabel&, std::vector<Item>&)>& finalize = {});

  StateView states() const;
  const ExecutionReport& report() const { return report_; }
  const EngineConfig& config() const { return cfg_; }
  std::uint64_t round_limit() const { return limit_; }

 private:
  void execute_round(const Transition& f, std::uint64_t phase_round, std::uint64_t budget, bool& quiescent);

  EngineConfig cfg_;
  std::uint64_t limit_ = 0;
  ExecutionReport report_;
  std::unique_ptr<StateStore> store_;
};

ExecutionReport run(const Algorithm& alg, std::span<const Item> inputs, const EngineConfig& cfg);

// Groups messages by destination; within a destination items are ordered
// by (origin, seq).
std::vector<NodeState> route(std::vector<Message> messages);

std::uint64_t default_round_limit(std::uint64_t input_weight, std::uint64_t M);

// Sum over rounds of f_time + L + C_r / B.
double lower_bound_time(const ExecutionReport& r, double L, double B);
// Same model over explicit per-round communication and f times.
double lower_bound_time(std::span<const std::uint64_t> comm, std::span<const std::uint64_t> ftime, double L,
                        double B);

std::uint64_t ceil_log(std::uint64_t base, std::uint64_t x);  // smallest L >= 0 with base^L >= x
std::uint64_t ipow(std::uint64_t base, std::uint64_t e);      // saturating

}  // namespace mrsim
