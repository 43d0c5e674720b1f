#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace tawrmac {

// SplitMix64 finalizer; used both as a stream generator and to derive
// independent sub-stream seeds from (seed, counter...) keys.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> key) {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (auto k : key) h = mix64(h ^ mix64(k));
  return h;
}

// Counter-based stream: cheap to construct per (walk, event, ...) key, so
// results never depend on which thread draws them.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}
  Rng(std::initializer_list<std::uint64_t> key) : state_(derive_seed(key)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); n > 0. Lemire's multiply-shift, exact for
  // the sizes we use (n < 2^32).
  std::uint64_t below(std::uint64_t n) {
    const auto x = static_cast<unsigned __int128>((*this)()) * n;
    return static_cast<std::uint64_t>(x >> 64);
  }

 private:
  std::uint64_t state_;
};

}  // namespace tawrmac
