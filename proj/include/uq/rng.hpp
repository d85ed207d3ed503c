#pragma once

#include <cmath>
#include <cstdint>

#include "uq/linalg.hpp"

namespace uq {

/// Counter-based generator: every draw is a hash of (key, counter), so
/// streams keyed by (seed, point, sample, ...) are independent of
/// evaluation order and cheap to split.
class CounterRng {
 public:
  explicit CounterRng(uint64_t seed) : key_(mix64(seed ^ kGolden)) {}
  CounterRng(uint64_t seed, uint64_t stream) : CounterRng(seed) { key_ = mix64(key_ ^ stream); }
  CounterRng(uint64_t seed, uint64_t s0, uint64_t s1) : CounterRng(seed, s0) {
    key_ = mix64(key_ ^ s1);
  }
  CounterRng(uint64_t seed, uint64_t s0, uint64_t s1, uint64_t s2) : CounterRng(seed, s0, s1) {
    key_ = mix64(key_ ^ s2);
  }

  uint64_t next_u64() { return mix64(key_ + kGolden * ++counter_); }

  /// Uniform in [0, 1), 53-bit resolution.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller. Two uniforms per pair, second value cached.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - next_uniform();  // (0, 1]
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Random integer in [0, bound) without modulo bias (rejection sampling).
  uint64_t next_below(uint64_t bound) {
    const uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  Vector gaussian_vector(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = next_gaussian();
    return v;
  }

  static uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  static constexpr double kPi = 3.14159265358979323846;

  uint64_t key_;
  uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace uq
