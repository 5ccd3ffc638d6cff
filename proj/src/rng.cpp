#include "arw/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace arw {

Rng::Rng(std::uint64_t key) noexcept {
  std::uint64_t x = key;
  for (auto& word : s_) {
    x += 0x9e3779b97f4a7c15ULL;
    word = mix64(x);
  }
  // All-zero state is the single fixed point of xoshiro.
  if (s_[0] == 0 && s_[1] == 0 && s_[2] == 0 && s_[3] == 0) s_[0] = 1;
}

double Rng::exponential(double rate) noexcept {
  return -std::log(uniform_pos()) / rate;
}

std::uint64_t Rng::below(std::uint64_t n) noexcept {
  // Reject the short final block so every residue is equally likely.
  const std::uint64_t threshold = (0 - n) % n;
  while (true) {
    const std::uint64_t r = (*this)();
    if (r >= threshold) return r % n;
  }
}

std::uint64_t Rng::poisson(double mean) {
  if (!(mean > 0.0) || mean > 500.0) {
    throw std::invalid_argument("poisson mean must be in (0, 500]");
  }
  double u = uniform();
  std::uint64_t k = 0;
  double p = std::exp(-mean);
  double cdf = p;
  while (u >= cdf) {
    ++k;
    p *= mean / static_cast<double>(k);
    const double next = cdf + p;
    if (next == cdf) break;  // tail below double resolution
    cdf = next;
  }
  return k;
}

std::size_t Rng::weighted_index(std::span<const double> weights, double total) noexcept {
  double target = uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (target < weights[i]) return i;
    target -= weights[i];
  }
  // Rounding left us past the end; return the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return 0;
}

std::uint64_t derive_key(std::uint64_t master, std::span<const std::uint64_t> path) noexcept {
  std::uint64_t key = mix64(master);
  std::uint64_t counter = 0;
  for (const auto index : path) {
    counter += 0x9e3779b97f4a7c15ULL;
    key = mix64(key ^ mix64(index + counter));
  }
  return key;
}

Rng derive_stream(const SeedStream& seed) { return Rng(derive_key(seed.master, seed.path)); }

}  // namespace arw
