#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

namespace arw {

/// SplitMix64 finalizer. Used both to expand seeds and as the mixing
/// function for stream derivation.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256** generator. 32 bytes of state, bit-identical on every
/// platform, and satisfies UniformRandomBitGenerator.
///
/// Distributions are provided as member functions rather than through
/// <random> because the standard distributions are implementation-defined,
/// which would break cross-platform reproducibility of CSV outputs.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1]; safe to take the logarithm of.
  double uniform_pos() noexcept { return 1.0 - uniform(); }

  /// Exponential variate with the given rate (> 0).
  double exponential(double rate) noexcept;

  /// Uniform integer in [0, n), n > 0. Modulo with rejection.
  std::uint64_t below(std::uint64_t n) noexcept;

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Poisson variate by sequential inversion. Mean must be in (0, 500].
  std::uint64_t poisson(double mean);

  /// Index drawn proportionally to nonnegative weights (not all zero).
  std::size_t weighted_index(std::span<const double> weights, double total) noexcept;

  const std::array<std::uint64_t, 4>& state() const noexcept { return s_; }

  bool operator==(const Rng&) const = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
};

/// A master seed plus a derivation path such as (cell, replica).
struct SeedStream {
  std::uint64_t master = 0;
  std::vector<std::uint64_t> path;
};

/// Folds the master seed and each path index through mix64 in counter mode:
///   k_0 = mix64(master), k_{i+1} = mix64(k_i ^ mix64(path_i + (i+1) * golden)).
/// Position-dependent, so (0,1) and (1,0) give different keys.
std::uint64_t derive_key(std::uint64_t master, std::span<const std::uint64_t> path) noexcept;

inline std::uint64_t derive_key(std::uint64_t master,
                                std::initializer_list<std::uint64_t> path) noexcept {
  return derive_key(master, std::span<const std::uint64_t>(path.begin(), path.size()));
}

Rng derive_stream(const SeedStream& seed);

/// Stream tags for the independent random sources inside one replica.
namespace stream_tag {
inline constexpr std::uint64_t init = 0x696e6974;      // counts, marks
inline constexpr std::uint64_t clock = 0x636c6f63;     // sleep clocks
inline constexpr std::uint64_t path = 0x70617468;      // putative paths, per particle
inline constexpr std::uint64_t gadget = 0x67616467;    // uniform marks z^{v,0}
}  // namespace stream_tag

}  // namespace arw
