#pragma once

// The PHD pipeline: x -> k^{-1/2} P H D x.
//
//   D  Rademacher sign diagonal
//   H  normalized Walsh-Hadamard transform (applied in place, O(d log d))
//   P  sparse k x d matrix, entry (i,j) = b_ij * N_ij / sqrt(q) with
//      b_ij ~ Bernoulli(q), N_ij ~ N(0,1)
//
// Everything here is a pure function of its inputs and a 64-bit seed.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fastjl/error.hpp"
#include "fastjl/random.hpp"

namespace fastjl {

enum class NormCriterion {
  SquaredNorm,  ///< accept when ||y||^2 / ||x||^2 is in (1 - eps, 1 + eps)
  Norm,         ///< accept when ||y|| / ||x|| is in (1 - eps, 1 + eps)
};

constexpr bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

/// Smallest power of two >= n (n >= 1).
constexpr std::size_t next_power_of_two(std::size_t n) noexcept {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

struct JlParams {
  std::size_t d = 0;
  std::size_t k = 0;
  double eps = 0.0;
  double q = 1.0;
  std::uint64_t seed = 0;
  NormCriterion norm_criterion = NormCriterion::SquaredNorm;

  void validate() const {
    if (!is_power_of_two(d)) {
      throw DimensionError("d must be a power of two, got " + std::to_string(d));
    }
    if (k < 1 || k > d) {
      throw ParameterError("k must satisfy 1 <= k <= d, got k=" + std::to_string(k) +
                           " d=" + std::to_string(d));
    }
    if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("eps must lie in (0,1)");
    if (!(q > 0.0 && q <= 1.0)) throw ParameterError("q must lie in (0,1]");
  }

  /// True when ratio = ||embedded|| / ||original|| is outside the accepted band.
  /// `squared_ratio` is the ratio of squared norms.
  [[nodiscard]] bool distorted(double squared_ratio) const {
    const double r = norm_criterion == NormCriterion::SquaredNorm ? squared_ratio
                                                                  : std::sqrt(squared_ratio);
    return !(r > 1.0 - eps && r < 1.0 + eps);
  }
};

// ---------------------------------------------------------------------------
// Walsh-Hadamard
// ---------------------------------------------------------------------------

/// v <- H_d v with H_d the normalized (orthogonal, symmetric) Hadamard matrix.
inline void fwht_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  if (!is_power_of_two(n)) {
    throw DimensionError("fwht: length " + std::to_string(n) + " is not a power of two");
  }
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = v[j];
        const double b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (double& x : v) x *= scale;
}

// ---------------------------------------------------------------------------
// Sign diagonal
// ---------------------------------------------------------------------------

struct SignDiagonal {
  std::vector<std::int8_t> signs;  // each +1 or -1
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t size() const noexcept { return signs.size(); }
};

inline SignDiagonal sample_signs(std::size_t d, std::uint64_t seed) {
  SignDiagonal D{std::vector<std::int8_t>(d), seed};
  Xoshiro256 rng(derive_seed(seed, 0));
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < d; ++i) {
    if (i % 64 == 0) bits = rng();
    D.signs[i] = (bits & 1u) ? std::int8_t{1} : std::int8_t{-1};
    bits >>= 1;
  }
  return D;
}

inline void apply_signs_inplace(std::span<double> v, const SignDiagonal& D) {
  if (v.size() != D.size()) {
    throw DimensionError("apply_signs: vector length " + std::to_string(v.size()) +
                         " != diagonal length " + std::to_string(D.size()));
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (D.signs[i] < 0) v[i] = -v[i];
  }
}

inline std::vector<double> apply_signs(std::span<const double> v, const SignDiagonal& D) {
  std::vector<double> out(v.begin(), v.end());
  apply_signs_inplace(out, D);
  return out;
}

// ---------------------------------------------------------------------------
// Sparse projection
// ---------------------------------------------------------------------------

/// Row-compressed k x d matrix. Row i occupies [row_ptr[i], row_ptr[i+1]) of
/// `cols` / `weights`, with strictly increasing column indices.
struct SparseProjection {
  std::size_t k = 0;
  std::size_t d = 0;
  double q = 0.0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::uint32_t> cols;
  std::vector<double> weights;

  [[nodiscard]] std::size_t nnz() const noexcept { return cols.size(); }

  [[nodiscard]] std::span<const std::uint32_t> row_cols(std::size_t i) const {
    return std::span(cols).subspan(row_ptr[i], row_ptr[i + 1] - row_ptr[i]);
  }
  [[nodiscard]] std::span<const double> row_weights(std::size_t i) const {
    return std::span(weights).subspan(row_ptr[i], row_ptr[i + 1] - row_ptr[i]);
  }

  /// A k x d matrix with no stored entries (the q = 0 limit).
  static SparseProjection empty(std::size_t k, std::size_t d) {
    return SparseProjection{k, d, 0.0, std::vector<std::size_t>(k + 1, 0), {}, {}};
  }
};

namespace detail {

/// Appends one row of P, drawn from its own stream. Bernoulli positions are
/// found by skipping geometric gaps, so the cost is O(entries in the row).
inline void sample_projection_row(std::size_t d, double q, std::uint64_t row_seed,
                                  std::vector<std::uint32_t>& cols,
                                  std::vector<double>& weights) {
  Xoshiro256 rng(row_seed);
  std::normal_distribution<double> gauss;
  const double scale = 1.0 / std::sqrt(q);
  const double log_fail = std::log1p(-q);  // -inf when q == 1
  const auto dd = static_cast<double>(d);
  double pos = -1.0;
  for (;;) {
    double gap = 0.0;
    if (q < 1.0) {
      // number of failures before the next success: floor(log U / log(1-q))
      gap = std::floor(std::log(rng.uniform_open0()) / log_fail);
    }
    pos += gap + 1.0;
    if (!(pos < dd)) break;
    cols.push_back(static_cast<std::uint32_t>(pos));
    weights.push_back(gauss(rng) * scale);
  }
}

}  // namespace detail

/// Draws P. Row i uses the stream derive_seed(seed, i + 1), so rows are
/// reproducible independently of generation order.
inline SparseProjection sample_projection(std::size_t k, std::size_t d, double q,
                                          std::uint64_t seed) {
  if (!(q > 0.0 && q <= 1.0)) throw ParameterError("sample_projection: q must lie in (0,1]");
  if (k < 1 || d < 1) throw ParameterError("sample_projection: k and d must be >= 1");
  if (d > std::numeric_limits<std::uint32_t>::max()) {
    throw DimensionError("sample_projection: d exceeds 2^32 - 1");
  }
  SparseProjection P;
  P.k = k;
  P.d = d;
  P.q = q;
  P.row_ptr.reserve(k + 1);
  P.row_ptr.push_back(0);
  const double expected = static_cast<double>(k) * static_cast<double>(d) * q;
  P.cols.reserve(static_cast<std::size_t>(expected + 4.0 * std::sqrt(expected) + 16.0));
  P.weights.reserve(P.cols.capacity());
  for (std::size_t i = 0; i < k; ++i) {
    detail::sample_projection_row(d, q, derive_seed(seed, i + 1), P.cols, P.weights);
    P.row_ptr.push_back(P.cols.size());
  }
  return P;
}

/// y = P v in O(nnz).
inline void project_into(const SparseProjection& P, std::span<const double> v,
                         std::span<double> out) {
  if (v.size() != P.d) {
    throw DimensionError("project: vector length " + std::to_string(v.size()) +
                         " != projection width " + std::to_string(P.d));
  }
  if (out.size() != P.k) throw DimensionError("project: output length mismatch");
  for (std::size_t i = 0; i < P.k; ++i) {
    double acc = 0.0;
    for (std::size_t e = P.row_ptr[i]; e < P.row_ptr[i + 1]; ++e) {
      acc += P.weights[e] * v[P.cols[e]];
    }
    out[i] = acc;
  }
}

inline std::vector<double> project(const SparseProjection& P, std::span<const double> v) {
  std::vector<double> out(P.k);
  project_into(P, v, out);
  return out;
}

// ---------------------------------------------------------------------------
// Composed embedding
// ---------------------------------------------------------------------------

struct EmbeddedVector {
  std::vector<double> values;

  [[nodiscard]] double squared_norm() const noexcept {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s;
  }
};

/// One draw of (D, P). Sample once and apply to many vectors when the same
/// map must be shared, e.g. for pairwise distances.
class FastJlTransform {
 public:
  FastJlTransform(SignDiagonal signs, SparseProjection projection)
      : signs_(std::move(signs)), projection_(std::move(projection)) {
    if (signs_.size() != projection_.d) {
      throw DimensionError("FastJlTransform: diagonal and projection widths differ");
    }
    if (!is_power_of_two(projection_.d)) {
      throw DimensionError("FastJlTransform: d must be a power of two");
    }
  }

  /// D from substream 0 of params.seed, P from substream 1.
  static FastJlTransform sample(const JlParams& params) {
    params.validate();
    return {sample_signs(params.d, derive_seed(params.seed, 0)),
            sample_projection(params.k, params.d, params.q, derive_seed(params.seed, 1))};
  }

  [[nodiscard]] std::size_t input_dim() const noexcept { return projection_.d; }
  [[nodiscard]] std::size_t output_dim() const noexcept { return projection_.k; }
  [[nodiscard]] const SignDiagonal& signs() const noexcept { return signs_; }
  [[nodiscard]] const SparseProjection& projection() const noexcept { return projection_; }

  /// Writes k^{-1/2} P H D x into out, using `scratch` (length d) as workspace.
  void apply_into(std::span<const double> x, std::span<double> scratch,
                  std::span<double> out) const {
    if (x.size() != input_dim()) {
      throw DimensionError("embed: input length " + std::to_string(x.size()) +
                           " != d = " + std::to_string(input_dim()));
    }
    if (scratch.size() != input_dim() || out.size() != output_dim()) {
      throw DimensionError("embed: workspace length mismatch");
    }
    std::copy(x.begin(), x.end(), scratch.begin());
    apply_signs_inplace(scratch, signs_);
    fwht_inplace(scratch);
    project_into(projection_, scratch, out);
    const double scale = 1.0 / std::sqrt(static_cast<double>(output_dim()));
    for (double& y : out) y *= scale;
  }

  [[nodiscard]] EmbeddedVector apply(std::span<const double> x) const {
    std::vector<double> scratch(input_dim());
    EmbeddedVector y{std::vector<double>(output_dim())};
    apply_into(x, scratch, y.values);
    return y;
  }

 private:
  SignDiagonal signs_;
  SparseProjection projection_;
};

inline EmbeddedVector embed(std::span<const double> x, const JlParams& params) {
  if (x.size() != params.d) {
    throw DimensionError("embed: input length " + std::to_string(x.size()) +
                         " != d = " + std::to_string(params.d));
  }
  return FastJlTransform::sample(params).apply(x);
}

inline EmbeddedVector embed(std::span<const double> x, const SignDiagonal& D,
                            const SparseProjection& P) {
  return FastJlTransform(D, P).apply(x);
}

// ---------------------------------------------------------------------------
// Dense Gaussian baseline
// ---------------------------------------------------------------------------

/// k x d matrix of i.i.d. N(0,1) entries, row-major.
class DenseProjection {
 public:
  DenseProjection(std::size_t k, std::size_t d, std::uint64_t seed) : k_(k), d_(d), a_(k * d) {
    if (k < 1 || d < 1) throw ParameterError("dense projection: k and d must be >= 1");
    for (std::size_t i = 0; i < k; ++i) {
      Xoshiro256 rng(derive_seed(seed, i));
      std::normal_distribution<double> gauss;
      for (std::size_t j = 0; j < d; ++j) a_[i * d + j] = gauss(rng);
    }
  }

  [[nodiscard]] std::size_t input_dim() const noexcept { return d_; }
  [[nodiscard]] std::size_t output_dim() const noexcept { return k_; }

  /// out = k^{-1/2} A x.
  void apply_into(std::span<const double> x, std::span<double> out) const {
    if (x.size() != d_) {
      throw DimensionError("dense embed: input length " + std::to_string(x.size()) +
                           " != d = " + std::to_string(d_));
    }
    if (out.size() != k_) throw DimensionError("dense embed: output length mismatch");
    const double scale = 1.0 / std::sqrt(static_cast<double>(k_));
    for (std::size_t i = 0; i < k_; ++i) {
      const double* row = a_.data() + i * d_;
      double acc = 0.0;
      for (std::size_t j = 0; j < d_; ++j) acc += row[j] * x[j];
      out[i] = acc * scale;
    }
  }

  [[nodiscard]] EmbeddedVector apply(std::span<const double> x) const {
    EmbeddedVector y{std::vector<double>(k_)};
    apply_into(x, y.values);
    return y;
  }

 private:
  std::size_t k_;
  std::size_t d_;
  std::vector<double> a_;
};

inline EmbeddedVector dense_embed_reference(std::span<const double> x, std::size_t k,
                                            std::uint64_t seed) {
  return DenseProjection(k, x.size(), seed).apply(x);
}

}  // namespace fastjl
