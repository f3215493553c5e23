#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace rumor {

// Deterministic random helpers. mt19937_64 output is fully specified by the
// standard, and every distribution is implemented here, so identical seeds
// produce identical streams on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform in [0, n); n must be > 0.
  std::size_t uniform_index(std::size_t n) {
    auto i = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Box-Muller; consumes two engine draws per call.
  double normal(double mean, double stddev) {
    double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * kTau * u2);
  }

  // Fisher-Yates.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent child generator for stream `stream_id`, derived from the
  // original seed so forks do not depend on how far this generator advanced.
  Rng fork(std::uint64_t stream_id) const {
    return Rng(mix(seed_ ^ mix(stream_id + 0x9e3779b97f4a7c15ULL)));
  }

  static std::uint64_t mix(std::uint64_t x) {  // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  static constexpr double kTau = 6.283185307179586476925286766559;
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace rumor
