#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "fastjl/error.hpp"
#include "fastjl/random.hpp"
#include "fastjl/transform.hpp"

namespace fastjl {

/// Lower-bound instance: x has 2^l equal leading coordinates 2^{-l/2} and
/// zeros elsewhere, where l = floor(log2(log2(1/sqrt(2 delta)))).
///
/// With probability 2^{-2^l} the sign diagonal fixes x, and then u = H x has
/// exactly m = d / 2^l non-zeros, all equal to sqrt(2^l / d). Indices are
/// 0-based: the support is every index divisible by 2^l (the 1-based
/// positions 1, 2^l + 1, 2*2^l + 1, ...).
struct HardInstance {
  std::size_t d = 0;
  double delta = 0.0;
  unsigned l = 0;
  std::vector<double> x;
  std::vector<std::size_t> predicted_support;
  double predicted_magnitude = 0.0;
  std::size_t m = 0;

  [[nodiscard]] std::size_t block() const noexcept { return std::size_t{1} << l; }
  /// Probability that D x = x, i.e. the first 2^l signs are all +1.
  [[nodiscard]] double sign_event_probability() const { return std::ldexp(1.0, -static_cast<int>(block())); }
};

/// Largest d for which hard_vector reads the support off an explicit
/// transform of x; above it the index rule is used.
inline constexpr std::size_t kHardInstanceDirectLimit = 4096;

/// Real-valued level expression log2(log2(1/sqrt(2 delta))).
inline double hard_instance_level_expr(double delta) {
  return std::log2(std::log2(1.0 / std::sqrt(2.0 * delta)));
}

inline HardInstance hard_vector(double delta, std::size_t d) {
  if (!(delta > 0.0 && delta < 0.5)) {
    throw ParameterError("hard_vector: delta must lie in (0, 1/2), got " + std::to_string(delta));
  }
  if (!is_power_of_two(d)) {
    throw DimensionError("hard_vector: d must be a power of two, got " + std::to_string(d));
  }
  const double level = hard_instance_level_expr(delta);
  if (!(level >= 0.0)) {
    // log2(1/sqrt(2 delta)) < 1, so no integer l >= 0 brackets the expression.
    throw ParameterError("hard_vector: delta must be <= 1/8 for a non-negative level, got " +
                         std::to_string(delta));
  }
  const auto l = static_cast<unsigned>(std::floor(level));
  if (l >= 63 || (std::size_t{1} << l) > d) {
    throw InstanceError("hard_vector: 2^l = 2^" + std::to_string(l) + " exceeds d = " +
                        std::to_string(d) + "; delta too small for this dimension");
  }

  HardInstance inst;
  inst.d = d;
  inst.delta = delta;
  inst.l = l;
  const std::size_t block = inst.block();
  inst.m = d / block;
  inst.x.assign(d, 0.0);
  const double lead = 1.0 / std::sqrt(static_cast<double>(block));
  std::fill_n(inst.x.begin(), block, lead);
  inst.predicted_magnitude = std::sqrt(static_cast<double>(block) / static_cast<double>(d));

  if (d <= kHardInstanceDirectLimit) {
    std::vector<double> u = inst.x;
    fwht_inplace(u);
    const double cutoff = 0.5 * inst.predicted_magnitude;
    for (std::size_t i = 0; i < d; ++i) {
      if (std::abs(u[i]) > cutoff) inst.predicted_support.push_back(i);
    }
  } else {
    inst.predicted_support.reserve(inst.m);
    for (std::size_t i = 0; i < d; i += block) inst.predicted_support.push_back(i);
  }
  return inst;
}

/// Gaussian direction normalized to unit length; deterministic per seed.
inline std::vector<double> random_unit_vector(std::size_t d, std::uint64_t seed) {
  if (d < 1) throw ParameterError("random_unit_vector: d must be >= 1");
  Xoshiro256 rng(derive_seed(seed, 0));
  std::normal_distribution<double> gauss;
  std::vector<double> v(d);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& x : v) {
      x = gauss(rng);
      norm2 += x * x;
    }
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

/// Unit vector with `nnz` non-zero Gaussian coordinates at random positions.
inline std::vector<double> random_sparse_unit_vector(std::size_t d, std::size_t nnz,
                                                     std::uint64_t seed) {
  if (nnz < 1 || nnz > d) throw ParameterError("random_sparse_unit_vector: need 1 <= nnz <= d");
  Xoshiro256 rng(derive_seed(seed, 1));
  std::vector<std::size_t> idx(d);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // partial Fisher-Yates
  for (std::size_t i = 0; i < nnz; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, d - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  const std::vector<double> dense = random_unit_vector(nnz, seed);
  std::vector<double> v(d, 0.0);
  for (std::size_t i = 0; i < nnz; ++i) v[idx[i]] = dense[i];
  return v;
}

/// Standard basis vector e_i.
inline std::vector<double> basis_vector(std::size_t d, std::size_t i) {
  if (i >= d) throw ParameterError("basis_vector: index out of range");
  std::vector<double> v(d, 0.0);
  v[i] = 1.0;
  return v;
}

}  // namespace fastjl
