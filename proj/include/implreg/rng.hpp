#pragma once

#include <cstdint>
#include <limits>

#include "implreg/types.hpp"

namespace implreg {

/// Counter-based generator: output k of stream s under seed S is
/// splitmix64_mix(key(S, s) + (k + 1) * 0x9E3779B97F4A7C15). Every
/// (seed, stream) pair is an independent, random-access sequence, so parallel
/// replicates can each own a stream without coordination.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  std::uint64_t counter() const { return counter_; }
  void seek(std::uint64_t counter) { counter_ = counter; }

  double uniform();         ///< in [0, 1)
  double uniform(double lo, double hi);
  double normal();          ///< standard normal (Box-Muller, no caching)
  long poisson(double mean);
  Vec normal_vector(Index n);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_mix(std::uint64_t z);

}  // namespace implreg
