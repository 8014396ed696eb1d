#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace blockpred {

/// Derives an independent stream seed from a run seed and a label.
/// Used to give each pipeline stage (and each simulated object / frame) its own
/// stream so results do not depend on call order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

/// mt19937_64 with distribution code written out here. The standard
/// distributions are implementation-defined, which would make seeded outputs
/// differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n);
  bool bernoulli(double p) { return uniform01() < p; }
  double normal(double mean = 0.0, double stddev = 1.0);
  double exponential(double rate);
  /// Poisson(mean) by inversion; adequate for the small means used here.
  std::uint64_t poisson(double mean);

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = index(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace blockpred
