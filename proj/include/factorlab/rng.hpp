#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string_view>
#include <vector>

#include "factorlab/common.hpp"

namespace factorlab {

/// Splittable counter-based generator (splitmix64 core). Every random choice
/// in the project flows from one of these; there is no global RNG. Child
/// streams derived via split() are independent of how many values the parent
/// has produced, which keeps seeding reproducible when code is reordered.
class Rng {
 public:
  explicit Rng(uint64_t seed) : root_(seed), state_(mix64(seed ^ kStreamSalt)) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). bound must be positive.
  int next_below(int bound) {
    require(bound > 0, "Rng::next_below: bound must be positive");
    // Rejection sampling keeps the distribution exactly uniform.
    const uint64_t b = static_cast<uint64_t>(bound);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % b;
    uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return static_cast<int>(x % b);
  }

  bool next_bool(double p_true) { return next_double() < p_true; }

  /// Standard normal via Box-Muller (no cached spare; two uniforms per draw).
  double next_normal() {
    const double u1 = 1.0 - next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643 * u2);
  }

  /// Normal(0, std) resampled until within +-2 std.
  double next_trunc_normal(double std_dev) {
    double z = next_normal();
    while (std::abs(z) > 2.0) z = next_normal();
    return z * std_dev;
  }

  /// Independent child stream; unaffected by the parent's draw position.
  Rng split(uint64_t tag) const { return Rng(mix64(root_ ^ mix64(tag + 0x6A09E667F3BCC909ULL))); }

  Rng split(std::string_view name) const {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : name) h = (h ^ static_cast<uint8_t>(c)) * 0x100000001B3ULL;
    return split(h);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(next_below(static_cast<int>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct values from {0, ..., n-1}, in draw order.
  std::vector<int> sample_distinct(int n, int k) {
    require(k >= 0 && k <= n, "Rng::sample_distinct: need 0 <= k <= n");
    std::vector<int> pool(static_cast<size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<int> out;
    out.reserve(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) {
      const int j = i + next_below(n - i);
      std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
      out.push_back(pool[static_cast<size_t>(i)]);
    }
    return out;
  }

 private:
  static constexpr uint64_t kStreamSalt = 0x9E3779B97F4A7C15ULL;

  static uint64_t mix64(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  uint64_t root_;
  uint64_t state_;
};

}  // namespace factorlab
