#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace speccart {

/// xoshiro256++ seeded through SplitMix64.
///
/// All stochastic components use this generator instead of <random> so that
/// fixtures and experiment outputs are identical across standard libraries
/// and platforms. Substreams are derived with stream(): child k of seed s is
/// seeded with splitmix(s ^ golden*(k+1)), which is how the corruption model
/// assigns one independent stream per satellite.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent substream (e.g. one per satellite / trial).
  Rng stream(std::uint64_t stream_id) const;

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  /// Uniform integer in [lo, hi], inclusive. Unbiased via rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Standard normal via Box-Muller (no rejection, reproducible).
  double normal();
  double normal(double mean, double stddev);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t seed_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace speccart
