#pragma once

#include <cstdint>
#include <string_view>

namespace uavd {

/// 64-bit FNV-1a; used for stream keys and tokenizer fingerprints.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// SplitMix64 stream. Fully specified arithmetic, so draws are identical across
/// compilers and standard libraries (unlike std:: distributions).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Counter-based stream for one logical sample: keyed by (seed, tag, index).
  static Rng keyed(std::uint64_t seed, std::string_view tag, std::uint64_t index);

  std::uint64_t next_u64();
  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Uniform double in [0, 1).
  double uniform();
  /// Standard normal via Box-Muller.
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace uavd
