#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vab {

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Stream seed for a (master seed, run index, purpose tag) triple. Streams
/// with different tags are statistically independent, so adding a new
/// consumer never shifts the draws of an existing one.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                          std::string_view tag);

/// Run-local random stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  /// +1 or -1 with equal probability.
  double sign() { return (engine_() >> 63) ? 1.0 : -1.0; }
  double normal() { return normal_(engine_); }
  std::uint64_t next() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace vab
