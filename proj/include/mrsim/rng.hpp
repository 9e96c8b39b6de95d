#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "mrsim/label.hpp"

namespace mrsim {

std::uint64_t mix64(std::uint64_t x);

// SplitMix64 stream. The bounded draw is implemented here rather than via
// <random> distributions so results are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  Rng(std::uint64_t seed, const NodeLabel& label, std::uint64_t round);

  std::uint64_t next();
  // Uniform in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  std::int64_t range(std::int64_t lo, std::int64_t hi);  // inclusive
  bool chance(std::uint64_t num, std::uint64_t den) { return below(den) < num; }

  template <class T>
  void shuffle(std::span<T> xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(xs[i - 1], xs[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace mrsim
