#pragma once

#include <cstdint>
#include <random>

namespace sahiqc {

/// Seeded generator with platform-independent output. std::mt19937_64 is
/// bit-exact everywhere; the distributions in <random> are not, so the
/// uniform draws are built directly from the raw 64-bit stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on {0, ..., n-1}. Rejection-free modulo is fine here;
  /// n is always tiny compared to 2^64 so the bias is unobservable.
  std::uint64_t index(std::uint64_t n) { return engine_() % n; }

  bool coin(double p_true = 0.5) { return uniform() < p_true; }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sahiqc
