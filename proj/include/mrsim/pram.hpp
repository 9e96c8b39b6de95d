#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mrsim/engine.hpp"
#include "mrsim/prefix.hpp"

namespace mrsim {

enum class Combine { Sum, Min, Max };

std::string_view combine_name(Combine c);
std::optional<Combine> parse_combine(std::string_view s);
std::int64_t apply_combine(Combine c, std::int64_t a, std::int64_t b);

struct AddressOutOfRange : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct CombineOverflow : std::overflow_error {
  using std::overflow_error::overflow_error;
};

struct PramAction {
  std::int64_t state = 0;
  std::optional<std::uint64_t> next_read;
  std::optional<std::pair<std::uint64_t, std::int64_t>> write;  // (address, value)
};

using PramStep =
    std::function<PramAction(std::uint64_t pid, std::uint64_t t, std::int64_t state, std::optional<std::int64_t> read)>;

struct PramProgram {
  std::uint64_t P = 1;
  std::vector<std::int64_t> memory;
  std::uint64_t T = 0;
  std::vector<std::int64_t> init_state;                 // size P, zero if empty
  std::vector<std::optional<std::uint64_t>> first_read;  // size P, none if empty
  PramStep step;
  Combine combine = Combine::Sum;
};

struct PramResult {
  std::vector<std::int64_t> memory;
  std::vector<std::int64_t> states;
  TreeGeometry funnel;
  ExecutionReport report;
  std::vector<std::uint64_t> requests_per_step;
  std::vector<std::uint64_t> active_labels_per_step;
};

// Funnel trees: d = M/2, L = ceil(log_d P), L = 1 when P <= d.
TreeGeometry funnel_geometry(std::uint64_t P, std::uint64_t M);

PramResult simulate_pram(const PramProgram& prog, const EngineConfig& cfg);
PramResult pram_oracle(const PramProgram& prog);

// Demo programs.
PramProgram sum_reduce_program(std::vector<std::int64_t> values);
PramProgram histogram_program(std::uint64_t P, std::uint64_t cells);
PramProgram max_scan_program(std::vector<std::int64_t> values);
// Random reads and writes driven by a fixed seed, used by the differential suite.
PramProgram random_pram_program(std::uint64_t P, std::uint64_t N_mem, std::uint64_t T, Combine c, std::uint64_t seed);

}  // namespace mrsim
