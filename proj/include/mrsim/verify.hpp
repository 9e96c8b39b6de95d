#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mrsim/pram.hpp"

namespace mrsim {

// Desk-scale oracle suites over seeds 1..seeds.
struct VerifyOptions {
  std::uint64_t seeds = 3;
  std::optional<Combine> combine;  // pram suite only; all three when unset
};

struct SuiteReport {
  std::string name;
  std::uint64_t checks = 0;
  std::uint64_t failures = 0;
  std::uint64_t rounds = 0;         // summed over the suite's runs
  std::uint64_t communication = 0;  // likewise
  std::vector<std::string> failed;  // first few failing checks
  bool passed() const { return failures == 0; }
};

const std::vector<std::string>& suite_names();
// Accepts the names above and the run aliases bsp-demo and pram-demo.
std::optional<std::string> canonical_suite(std::string_view name);
SuiteReport run_suite(std::string_view name, const VerifyOptions& opt);
// One JSON line.
std::string suite_json(const SuiteReport& r);

}  // namespace mrsim
