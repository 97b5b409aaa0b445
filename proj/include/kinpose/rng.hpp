#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "kinpose/types.hpp"

namespace kinpose {

// splitmix64 step; also used as the stream-derivation mixer so that RNG
// streams keyed by (seed, tag, index...) are independent of worker count.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b));
}

// Small deterministic generator. Not std::<random> because the dataset,
// model and report bytes must be reproducible across standard libraries,
// and libstdc++/libc++ distributions differ.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0,n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // 64-bit multiply-shift; bias is negligible for the n used here.
    return std::uint64_t((__uint128_t(next_u64()) * n) >> 64);
  }

  double normal() {
    // Box-Muller; consumes exactly two uniforms.
    const double u1 = std::max(uniform(), 0x1.0p-60);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform inside the ball of the given radius; fixed draw count.
  Vec3 uniform_in_sphere(double radius) {
    Vec3 dir(normal(), normal(), normal());
    const double n = dir.norm();
    if (n < 1e-300) dir = Vec3(1, 0, 0);
    else dir /= n;
    return dir * (radius * std::cbrt(uniform()));
  }

  // First k entries of a random permutation of [0,n).
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    const int m = std::min(k, n);
    for (int i = 0; i < m; ++i) {
      const int j = i + int(uniform_index(std::uint64_t(n - i)));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    return idx;
  }

 private:
  std::uint64_t state_;
};

}  // namespace kinpose
