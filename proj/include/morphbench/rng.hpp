#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace morphbench {

// Seed derivation for independent deterministic streams. Streams are keyed by
// (global seed, string tag, integer context); the same key always yields the
// same stream regardless of thread schedule or call order.
uint64_t hash_u64(uint64_t h, uint64_t v);
uint64_t hash_str(uint64_t h, std::string_view s);

// Deterministic RNG. Raw engine draws are scaled explicitly instead of going
// through std::*_distribution, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0,1) with 53-bit resolution.
  double uniform() { return (eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), unbiased.
  uint64_t uniform_below(uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal (Box-Muller, pair cached).
  double normal();

  // Gamma(shape, 1): Marsaglia-Tsang, with the power boost for shape < 1.
  double gamma(double shape);

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Seeded Fisher-Yates; unlike std::shuffle the permutation depends only on
// the engine sequence, not the standard library.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.uniform_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace morphbench
