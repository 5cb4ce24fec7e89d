#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace frkd {

/// Philox4x32-10 counter-based generator.
///
/// Streams are split deterministically: stream({a, b, c}) derives a new key
/// by folding the path elements into the parent key with a SplitMix64-style
/// mix, so (seed, path) fully identifies the stream. The harness assigns one
/// path element per role (process draw, station layout, noise source, ...)
/// followed by the realization / condition / repetition indices; two streams
/// with different paths are independent for all practical purposes.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  /// Child stream derived from this stream's seed and the given path.
  [[nodiscard]] Rng stream(std::initializer_list<std::uint64_t> path) const;

  std::uint64_t next_u64();
  /// Uniform on (0, 1].
  double next_double();
  /// Standard normal (Box-Muller; second value of each pair is cached).
  double next_gaussian();
  /// Uniform integer in [0, bound) without modulo bias.
  std::uint64_t next_below(std::uint64_t bound);

  std::uint64_t seed() const { return seed_; }

  // UniformRandomBitGenerator interface.
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<std::uint64_t>::max(); }
  result_type operator()() { return next_u64(); }

 private:
  void advance_block();

  std::uint64_t seed_;
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;  // force generation on first use
  double gauss_cache_ = 0.0;
  bool has_gauss_cache_ = false;
};

}  // namespace frkd
