#pragma once

// Keyed random streams for reproducible parallel Monte Carlo.
//
// A Stream is identified by (root seed, tag, index). Ensembles draw proposal i
// from Stream(seed, tag, i), so the set of accepted proposals and their
// ordering depend only on the key, never on how proposals are distributed
// over worker threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace smallball {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed = 0) noexcept { reseed(seed); }

  void reseed(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
};

/// Mixes a key tuple into a single well-spread 64-bit seed.
inline constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag,
                                           std::uint64_t index) noexcept {
  std::uint64_t state = root;
  std::uint64_t h = splitmix64(state);
  state = h ^ (tag * 0xd6e8feb86659fd93ULL);
  h = splitmix64(state);
  state = h ^ (index * 0xa0761d6478bd642fULL);
  return splitmix64(state);
}

class Stream {
 public:
  using result_type = Xoshiro256pp::result_type;

  explicit Stream(std::uint64_t root_seed, std::uint64_t tag = 0,
                  std::uint64_t index = 0) noexcept
      : engine_(derive_seed(root_seed, tag, index)) {}

  static constexpr result_type min() noexcept { return Xoshiro256pp::min(); }
  static constexpr result_type max() noexcept { return Xoshiro256pp::max(); }
  result_type operator()() noexcept { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_(engine_); }

  /// Exponential with the given rate.
  double exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

 private:
  Xoshiro256pp engine_;
  boost::random::normal_distribution<double> normal_{};
};

/// Tags that keep the streams of different ensembles of one experiment apart.
namespace stream_tag {
inline constexpr std::uint64_t kBrownian = 1;
inline constexpr std::uint64_t kOrnsteinUhlenbeck = 2;
inline constexpr std::uint64_t kKarhunenLoeve = 3;
inline constexpr std::uint64_t kHardConditioned = 4;
inline constexpr std::uint64_t kKilled = 5;
inline constexpr std::uint64_t kScaledSource = 6;
inline constexpr std::uint64_t kScaledTarget = 7;
}  // namespace stream_tag

}  // namespace smallball
