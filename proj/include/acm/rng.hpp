#pragma once

// Counter-based RNG: (seed, stream) pairs give reproducible independent
// streams regardless of draw order across workers.

#include <cmath>
#include <cstdint>
#include <complex>

#include "acm/core.hpp"

namespace acm {

// splitmix64 finalizer; full-period mixing of a 64-bit counter.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed ^ 0x5851f42d4c957f2dULL) ^ mix64(stream * 0x2545f4914f6cdd1dULL + 1)) {}

  std::uint64_t next_u64() { return mix64(key_ ^ counter_++); }

  // uniform in (0, 1]; never exactly 0, safe for log().
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // standard real normal via Box-Muller.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u = next_uniform();
    const double v = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    spare_ = r * std::sin(2.0 * kPi * v);
    have_spare_ = true;
    return r * std::cos(2.0 * kPi * v);
  }

  // N_C(0,1): E|xi|^2 = 1, real and imaginary parts independent N(0,1/2).
  Complex next_complex_normal() {
    const double a = next_normal();
    const double b = next_normal();
    return Complex(a, b) / std::sqrt(2.0);
  }

  CVector complex_normal_vector(Eigen::Index n) {
    CVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = next_complex_normal();
    return v;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace acm
