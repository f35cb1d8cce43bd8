#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace scope {

// Dense parameter/gradient vector; the dimension is the length.
using ModelVector = std::vector<double>;

inline bool all_finite(const ModelVector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline double norm_sq(const ModelVector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

inline double dist_sq(const ModelVector& a, const ModelVector& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

inline void add_in_place(ModelVector& acc, const ModelVector& v) {
  for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += v[j];
}

// Shared reduction primitive: every averaging path (master, sequential
// baseline, test oracles) divides elementwise through this exact function so
// that equal inputs round identically.
inline void div_in_place(ModelVector& v, double divisor) {
  for (double& x : v) x /= divisor;
}

// One variance-reduced inner step: u <- decay*u - eta*(gu - gw + zhat).
// SCOPE workers and the sequential baseline both step through this kernel,
// which is what makes the p = 1, c = 0 reduction bit-for-bit.
inline void vr_step(ModelVector& u, const ModelVector& gu, const ModelVector& gw,
                    const ModelVector& zhat, double decay, double eta) {
  for (std::size_t j = 0; j < u.size(); ++j) {
    u[j] = decay * u[j] - eta * (gu[j] - gw[j] + zhat[j]);
  }
}

// Unbiased draw from [0, n) by rejection. std::uniform_int_distribution is
// implementation-defined, so runs would not reproduce across standard
// libraries; this one is pinned.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

// Worker k advances only its own stream; ids start at 1. The sequential SVRG
// baseline uses stream 1, which gives it the same index sequence as a single
// SCOPE worker under a shared seed.
inline std::mt19937_64 worker_rng(std::uint64_t seed, int worker_id) {
  return std::mt19937_64(seed ^ static_cast<std::uint64_t>(worker_id));
}

}  // namespace scope
