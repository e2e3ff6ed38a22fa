#pragma once

#include <cstdint>
#include <random>

namespace elastodual {

/// Seeded generator whose draws do not depend on the standard library's
/// distribution implementations, so sampled reports are reproducible across
/// toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on [-1, 1).
  double symmetric() { return 2.0 * uniform() - 1.0; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace elastodual
