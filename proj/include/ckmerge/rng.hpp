#pragma once

#include <cmath>
#include <cstdint>

namespace ckmerge {

// Counter-based pseudo-random numbers built on the splitmix64 finalizer.
// Every draw is a pure function of (seed, counter), so traces replay
// identically across runs and platforms regardless of call order elsewhere.

inline std::uint64_t hash64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t rng_bits(std::uint64_t seed, std::uint64_t counter) {
  return hash64(hash64(seed) ^ (counter + 0x9e3779b97f4a7c15ULL));
}

// Uniform in [0, 1) with 53 random bits.
inline double rng_u01(std::uint64_t seed, std::uint64_t counter) {
  return static_cast<double>(rng_bits(seed, counter) >> 11) * 0x1.0p-53;
}

// Derive an independent stream, e.g. per split or per run.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t tag) {
  return hash64(seed ^ hash64(tag));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  double uniform() { return rng_u01(seed_, counter_++); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t bits() { return rng_bits(seed_, counter_++); }

  // Index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(bits() % static_cast<std::uint64_t>(n));
  }

  // Standard normal via Box-Muller; draws two uniforms per pair.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ckmerge
