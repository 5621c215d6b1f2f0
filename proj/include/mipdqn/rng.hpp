#pragma once

#include <cstdint>
#include <random>

namespace mipdqn {

// Deterministic random source. std::mt19937_64 output is fully specified by
// the standard; the distributions below are hand-rolled because the standard
// library distribution algorithms are implementation-defined and would break
// bit-identical reproducibility across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0,1) with 53 bits of resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller; one spare value cached.
  double normal(double mean = 0.0, double stddev = 1.0);

  // Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  // Derive an independent stream (e.g. one per seed/worker).
  Rng fork() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mipdqn
