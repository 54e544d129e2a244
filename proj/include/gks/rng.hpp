#pragma once

#include <cstdint>
#include <random>

namespace gks {

/// SplitMix64 finalizer, used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for sub-stream `stream` of master seed `seed`:
/// splitmix64(seed ^ splitmix64(stream + 0x9E3779B97F4A7C15)).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

/// Portable generator: std::mt19937_64 bits (fixed by the standard) with
/// hand-written uniform and normal transforms, so draws are identical on
/// every conforming platform. std:: distributions are avoided on purpose.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via the Marsaglia polar method.
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  Rng fork(std::uint64_t stream) { return Rng(stream_seed(next_u64(), stream)); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gks
