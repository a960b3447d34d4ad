#ifndef ORTHOQ_RNG_HPP
#define ORTHOQ_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>

namespace orthoq {

// Splittable counter-style streams: a stream is addressed by (seed, path...)
// and mixed through SplitMix64 into xoshiro256++ state. Streams with distinct
// paths are independent, so parallel work units never share generator state
// and results do not depend on scheduling.
class Rng {
 public:
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
    std::uint64_t h = mix(seed);
    for (std::uint64_t p : path) h = mix(h ^ mix(p));
    Rng r;
    std::uint64_t s = h;
    for (int i = 0; i < 4; ++i) {
      s += 0x9e3779b97f4a7c15ULL;
      r.state_[i] = mix(s);
    }
    return r;
  }

  std::uint64_t next_u64() {
    auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n) without modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  /// Standard normal via Box-Muller; spare value cached in stream state so the
  /// draw sequence is fixed by the stream alone.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Fisher-Yates partial shuffle picking k of n indices; writes into out.
  template <typename IntVec>
  void sample_without_replacement(std::size_t n, std::size_t k, IntVec& out) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    IntVec pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = static_cast<typename IntVec::value_type>(i);
    out.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(below(n - i));
      std::swap(pool[i], pool[j]);
      out[i] = pool[i];
    }
  }

 private:
  std::uint64_t state_[4] = {1, 2, 3, 4};
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace orthoq

#endif
