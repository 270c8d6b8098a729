#ifndef SRS_RNG_HPP
#define SRS_RNG_HPP

#include <cmath>
#include <cstdint>

namespace srs {

/// Deterministic per-stream generator (xoshiro-free, fully specified):
/// SplitMix64 state advance, Box-Muller normals. Streams derived from
/// (seed, stream_id) are independent and schedule-free by construction.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // decorrelate trivially related seeds
    next_u64();
    next_u64();
  }

  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
    return Rng(mix(seed, 0x9e3779b97f4a7c15ULL ^ mix(stream_id, 0xbf58476d1ce4e5b9ULL)));
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// uniform in (0, 1)
  double uniform() {
    while (true) {
      const double x = (next_u64() >> 11) * 0x1.0p-53;
      if (x > 0.0) return x;
    }
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // multiply-shift; bias below 2^-64 * n is irrelevant here
    const unsigned __int128 m =
        static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n);
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  static std::uint64_t mix(std::uint64_t z, std::uint64_t c) {
    z += c;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace srs

#endif
