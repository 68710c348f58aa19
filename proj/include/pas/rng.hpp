#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <numbers>
#include <random>

namespace pas {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Seedable, splittable generator. The output sequence depends only on
// (seed, stream_index): mt19937_64 is fully specified by the standard and the
// normal transform is an explicit Box-Muller, so reruns are bit-identical
// across platforms. Per-sample work derives one stream per sample index.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_index) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s ^= stream_index * 0xBF58476D1CE4E5B9ull + 0x94D049BB133111EBull;
    std::uint64_t b = splitmix64(s);
    engine_.seed(a ^ (b + 0x9E3779B97F4A7C15ull * (stream_index + 1)));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in (0, 1].
  double uniform() {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  Eigen::VectorXd normal_vector(Eigen::Index dimension) {
    Eigen::VectorXd v(dimension);
    for (Eigen::Index i = 0; i < dimension; ++i) v[i] = normal();
    return v;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace pas
