#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mrsim/engine.hpp"

namespace mrsim {

struct SampleSortOptions {
  // A bucket larger than factor * sqrt(n) * log2(n) makes its parent resample.
  double oversize_factor = 4.0;
  std::uint64_t max_resamples = 3;  // per subproblem
};

struct SampleSortLevel {
  std::uint64_t subproblems = 0;  // instances with n > M at this depth
  std::uint64_t base_cases = 0;   // instances sorted at one node
  std::uint64_t max_n = 0;
  std::uint64_t max_bucket = 0;
  std::uint64_t unsound = 0;  // items labelled with a bucket outside their pivot interval
  std::uint64_t resampled = 0;
  std::uint64_t rounds = 0;
};

struct SampleSortResult {
  std::vector<std::uint64_t> ranks;  // by (value, original index)
  std::uint64_t depth = 0;           // levels that split at least one instance
  std::vector<SampleSortLevel> levels;
  ExecutionReport report;
};

// Needs M >= 8. CopyOverload and LeafOverflow from the subroutines propagate.
SampleSortResult sample_sort(std::span<const std::int64_t> X, const EngineConfig& cfg,
                             const SampleSortOptions& opt = {});

// ceil(sqrt(n)), at least 1.
std::uint64_t pivot_count(std::uint64_t n);

}  // namespace mrsim
