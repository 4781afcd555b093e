#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace groundkit {

// Seeded RNG with self-contained distributions. The standard library's
// distribution objects are implementation-defined, so every sampled value
// here goes through explicit formulas to keep outputs stable per seed.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    return n > 0 ? static_cast<int>(engine_() % static_cast<uint64_t>(n)) : 0;
  }

  // Standard normal via Box-Muller.
  double gauss() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double gauss(double mean, double sigma) { return mean + sigma * gauss(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = engine_() % i;
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derive an independent stream, e.g. one per restart or per image.
  Rng fork(uint64_t salt) {
    return Rng(engine_() ^ (salt * 0x9e3779b97f4a7c15ULL));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace groundkit
