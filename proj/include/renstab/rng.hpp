#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace renstab {

// Seeded randomness with deterministic substreams. Trial/restart k draws
// from substream(seed, k), so parallel and serial execution produce
// identical results and adding restarts never perturbs earlier ones.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix(seed) ^ mix(index * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL));
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; avoids unspecified stdlib
  // distribution internals so streams are reproducible everywhere.
  double gaussian() {
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::complex<double> complex_gaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return {re, im};
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace renstab
