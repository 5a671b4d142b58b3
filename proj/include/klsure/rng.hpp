#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>

namespace klsure {

/// Name and version of the generator; recorded in every manifest so that a
/// change of generator is visible in the outputs.
inline constexpr std::string_view kRngName = "splitmix64-counter/v1";

/// Mixes a seed with task coordinates (lambda index, probe index, row index,
/// ...) into an independent stream key. Order of coordinates matters.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> coords);

/// Counter-based generator: output n is mix(key + (n + 1) * golden_gamma).
/// Every draw is a pure function of (key, counter), so streams can be
/// split by key and results do not depend on the platform's <random>.
///
/// All distributions below are implemented here rather than taken from
/// <random>, whose distribution algorithms are implementation-defined.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, n) by rejection; n > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  /// +1 or -1 with equal probability.
  double rademacher();

  /// Standard normal via Box-Muller (one variate per call).
  double normal();

  /// Poisson variate by sequential inversion of the CDF. Means above 256
  /// are split into chunks of at most 256 (sum of independent Poissons),
  /// which keeps exp(-mean) away from underflow.
  std::uint64_t poisson(double mean);

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace klsure
