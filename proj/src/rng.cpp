#include "klsure/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace klsure {
namespace {

constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t poisson_inversion(CounterRng& rng, double mean) {
  // P(0) = exp(-mean); walk the CDF with the recurrence P(x+1) = P(x) mean/(x+1).
  const double u = rng.uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::uint64_t x = 0;
  while (u >= cdf) {
    ++x;
    p *= mean / static_cast<double>(x);
    cdf += p;
    if (p == 0.0 && cdf <= u) break;  // tail exhausted by rounding
  }
  return x;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) {
  std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t c : coords) {
    h = mix64(h + kGoldenGamma + mix64(c + 0x3c6ef372fe94f82bULL));
  }
  return h;
}

std::uint64_t CounterRng::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGoldenGamma);
}

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t CounterRng::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  const std::uint64_t limit = max() - (max() % n + 1) % n;
  std::uint64_t r = next_u64();
  while (r > limit) r = next_u64();
  return r % n;
}

double CounterRng::rademacher() { return (next_u64() >> 63) != 0 ? 1.0 : -1.0; }

double CounterRng::normal() {
  // 1 - uniform() lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterRng::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("poisson: mean must be finite and non-negative");
  }
  constexpr double kChunk = 256.0;
  std::uint64_t total = 0;
  while (mean > kChunk) {
    total += poisson_inversion(*this, kChunk);
    mean -= kChunk;
  }
  return total + poisson_inversion(*this, mean);
}

}  // namespace klsure
