#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace otafl {

/// Counter-based PRNG (Philox4x32-10) with named substreams.
///
/// Every consumer derives its own stream via spawn()/spawn_stream() with a
/// descriptive label, so adding a draw in one place never shifts the values
/// seen by another. All integer arithmetic; identical output on any platform.
/// Gaussian variates use an explicit Box-Muller transform (two uniforms in,
/// two normals out) instead of std::normal_distribution, whose draw sequence
/// is implementation-defined.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_int(std::uint64_t bound);

  /// Standard normal variate (Box-Muller; second variate cached).
  double gaussian();
  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  /// Child generator for an independent named stream. Pure: the parent's
  /// state is not consumed, and the same (seed, stream, label) always yields
  /// the same child.
  SeededRng spawn(std::string_view label) const;

 private:
  void refill();

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;  // exhausted
  bool has_spare_gauss_ = false;
  double spare_gauss_ = 0.0;
};

/// Free-function alias for stream derivation.
inline SeededRng spawn_stream(const SeededRng& rng, std::string_view label) {
  return rng.spawn(label);
}

}  // namespace otafl
