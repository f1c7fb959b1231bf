// Counter-based random streams (Philox4x64-10).
//
// A stream is identified by a 128-bit id derived hierarchically from a master
// seed with fork(index). Draw k of a stream is the Philox block at counter
// (k / 4, id_lo, id_hi, 0), so two streams with different ids never share a
// counter value. Results depend only on (seed, fork path, draw index), never
// on which thread consumes the stream.
#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace altplan {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

using PhiloxCounter = std::array<std::uint64_t, 4>;
using PhiloxKey = std::array<std::uint64_t, 2>;

inline PhiloxCounter philox4x64_10(PhiloxCounter ctr, PhiloxKey key) {
  constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
  constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
  constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
  constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;
  for (int round = 0; round < 10; ++round) {
    const unsigned __int128 p0 = static_cast<unsigned __int128>(kM0) * ctr[0];
    const unsigned __int128 p1 = static_cast<unsigned __int128>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
    const auto lo0 = static_cast<std::uint64_t>(p0);
    const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
    const auto lo1 = static_cast<std::uint64_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

}  // namespace detail

class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) : key_{seed, 0x5EED5EED5EED5EEDULL}, id_{0, 0} {}

  /// Child stream `index` of this stream. Deterministic and independent of
  /// how many draws the parent has made.
  RandomStream fork(std::uint64_t index) const {
    RandomStream child(*this);
    const std::uint64_t salt = detail::splitmix64(index ^ 0xA0761D6478BD642FULL);
    child.id_[0] = detail::splitmix64(id_[0] ^ salt) ^ detail::splitmix64(id_[1] + index);
    child.id_[1] = detail::splitmix64(id_[1] ^ detail::splitmix64(salt + id_[0]));
    child.draws_ = 0;
    return child;
  }

  std::array<std::uint64_t, 2> id() const { return id_; }
  std::uint64_t seed() const { return key_[0]; }
  std::uint64_t draws() const { return draws_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t slot = draws_ & 3U;
    if (slot == 0) {
      block_ = detail::philox4x64_10({draws_ >> 2, id_[0], id_[1], 0}, key_);
    }
    ++draws_;
    return block_[slot];
  }

  /// Uniform variate on the open interval (0, 1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), bound > 0, unbiased (Lemire).
  std::uint64_t uniform_index(std::uint64_t bound) {
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  detail::PhiloxKey key_;
  std::array<std::uint64_t, 2> id_;
  std::uint64_t draws_ = 0;
  detail::PhiloxCounter block_{};
};

}  // namespace altplan
