#pragma once

#include <cstdint>
#include <random>

#include "mvsr/tensor.hpp"

namespace mvsr {

/// Seeded generator with a platform-independent float mapping
/// (std::uniform_real_distribution output differs between standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 24 bits of mantissa.
  float uniform() { return static_cast<float>(engine_() >> 40) * 0x1.0p-24f; }
  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

inline Tensor random_tensor(Shape shape, std::uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
  Tensor t(shape);
  Rng rng(seed);
  for (float& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace mvsr
