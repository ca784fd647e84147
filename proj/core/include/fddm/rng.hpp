#pragma once

#include <cstdint>
#include <random>

namespace fddm {

/// Seeded generator used everywhere randomness appears.
///
/// Engine: std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniform and normal variates are derived here (53-bit mantissa
/// uniforms, Box-Muller normals) rather than through <random> distributions,
/// whose algorithms are implementation-defined. There is no global state:
/// every consumer owns its Rng, and independent streams are obtained with
/// derive_seed().
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi] (inclusive).
  int uniform_int(int lo, int hi);
  double normal();

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// splitmix64 finalizer applied to (seed, stream); yields decorrelated
/// sub-seeds for named streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace fddm
