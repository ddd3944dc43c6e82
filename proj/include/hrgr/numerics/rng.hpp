#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>

namespace hrgr::num {

// splitmix64 finalizer; used for seeding and for deriving per-stream seeds.
std::uint64_t splitmix64(std::uint64_t& state);

// Mix a base seed with a list of keys (epoch, sample index, ...) into a new
// seed. Lets parallel workers draw from independent, order-free streams.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys);

// xoshiro256** seeded through splitmix64. All derived draws (uniform, normal,
// categorical) are implemented here rather than through <random>
// distributions, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller (one value per call, no cached spare).
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }
  // Uniform integer in [0, n), rejection-sampled so it is unbiased.
  std::uint64_t uniform_index(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  // Draw an index from unnormalized nonnegative weights.
  std::size_t categorical(std::span<const double> weights);

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

}  // namespace hrgr::num
