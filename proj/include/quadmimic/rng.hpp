#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace quadmimic {

// splitmix64 finalizer; also used as a stateless cell hash for terrain.
inline uint64_t hash_mix(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t seed, uint64_t v) {
  return hash_mix(seed ^ (v + 0x9E3779B97F4A7C15ull + (seed << 6) + (seed >> 2)));
}

// Deterministic stream with explicit transforms; distribution results do not
// depend on the standard library's <random> distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(hash_mix(seed)) {}

  uint64_t next_u64() { return gen_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds
  int uniform_int(int lo, int hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  // standard normal via Box-Muller, pairs cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double std) { return mean + std * normal(); }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace quadmimic
