#pragma once

#include <cstdint>
#include <random>

namespace driftlab {

/// Seeded random source with explicit, engine-only-dependent transforms.
/// Distribution math is hand-rolled (Box-Muller, Knuth Poisson) so a given
/// seed produces the same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; caches the spare deviate.
  double normal();

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  double lognormal(double mu, double sigma);

  /// Knuth's method for small lambda, normal approximation above 30.
  int poisson(double lambda);

  /// splitmix64-style combiner for deriving independent sub-seeds.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0;
};

}  // namespace driftlab
