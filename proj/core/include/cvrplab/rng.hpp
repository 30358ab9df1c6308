#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cvrplab {

// Seeded pseudo random source. All draws are derived from raw 64-bit engine
// output so streams are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1).
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  // Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Uniform integer on [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Deterministic seed expansion: mixes a root seed with a path of stream
// coordinates (run, instance, start, beam, ...) through splitmix64.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path);

}  // namespace cvrplab
