#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace chebnet {

/// Deterministic random source for every stochastic component in the library.
///
/// All distributions are implemented by hand on top of std::mt19937_64 (whose
/// output sequence is fixed by the standard), so a seed pins the exact stream
/// of draws across platforms and standard libraries. Nothing in the library
/// uses std::uniform_*_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], both inclusive. Rejection-sampled, unbiased.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);

  /// Standard normal via Box-Muller; consumes exactly two draws per call.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(0, i));
      std::swap(v[i], v[j]);
    }
  }

  std::vector<double> normal_vector(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; decorrelates seeds derived from one root.
std::uint64_t mix64(std::uint64_t x);

/// Seed for an independent stream: mix64(root ^ mix64(stream)).
/// Documented derivation so "seed=42" pins a whole multi-stream run.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

/// FNV-1a 64-bit hash; used for string-tagged streams and artifact digests.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace chebnet
