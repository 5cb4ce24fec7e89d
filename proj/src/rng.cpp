#include "frkd/rng.hpp"

#include <cmath>

namespace frkd {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fold(std::uint64_t key, std::uint64_t value) {
  return splitmix(key ^ (value + kGolden + (key << 6) + (key >> 2)));
}

inline void philox_round(std::array<std::uint32_t, 4>& x,
                         std::array<std::uint32_t, 2>& k) {
  constexpr std::uint64_t mul_a = 0xD2511F53ULL;
  constexpr std::uint64_t mul_b = 0xCD9E8D57ULL;
  const std::uint64_t p0 = mul_a * x[0];
  const std::uint64_t p1 = mul_b * x[2];
  const std::array<std::uint32_t, 4> y{
      static_cast<std::uint32_t>(p1 >> 32) ^ x[1] ^ k[0],
      static_cast<std::uint32_t>(p1),
      static_cast<std::uint32_t>(p0 >> 32) ^ x[3] ^ k[1],
      static_cast<std::uint32_t>(p0),
  };
  x = y;
  k[0] += 0x9E3779B9u;  // Weyl constants
  k[1] += 0xBB67AE85u;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  const std::uint64_t k = splitmix(seed + kGolden);
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

Rng Rng::stream(std::initializer_list<std::uint64_t> path) const {
  std::uint64_t k = seed_;
  for (std::uint64_t v : path) k = fold(k, v);
  return Rng(k);
}

void Rng::advance_block() {
  std::array<std::uint32_t, 4> x = counter_;
  std::array<std::uint32_t, 2> k = key_;
  for (int round = 0; round < 10; ++round) philox_round(x, k);
  block_ = x;
  block_pos_ = 0;
  // 128-bit counter increment
  for (int i = 0; i < 4; ++i) {
    if (++counter_[i] != 0) break;
  }
}

std::uint64_t Rng::next_u64() {
  if (block_pos_ >= 4) advance_block();
  const std::uint64_t lo = block_[block_pos_];
  const std::uint64_t hi = block_[block_pos_ + 1];
  block_pos_ += 2;
  return (hi << 32) | lo;
}

double Rng::next_double() {
  // 53-bit mantissa, shifted into (0, 1].
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double Rng::next_gaussian() {
  if (has_gauss_cache_) {
    has_gauss_cache_ = false;
    return gauss_cache_;
  }
  const double u1 = next_double();
  const double u2 = next_double();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  gauss_cache_ = radius * std::sin(angle);
  has_gauss_cache_ = true;
  return radius * std::cos(angle);
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
  // Rejection sampling over the largest multiple of bound.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

}  // namespace frkd
