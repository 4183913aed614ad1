#pragma once

// Closed-form schedules for the sparsity q and the target dimension k.
// The asymptotic statements hide constants; they appear here as explicit
// multipliers c_q and c_k.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include "fastjl/error.hpp"

namespace fastjl {

/// Smallest q any scheduler returns; keeps sampling well defined when the
/// formulas underflow.
inline constexpr double kMinSparsity = 0x1.0p-32;

enum class Scheduler {
  Theorem1,        ///< min{eps, (ln n / d) max{1, eps ln n / ln(1/eps)}}
  AilonChazelle,   ///< ln^2 n / d
  LowerThreshold,  ///< Theorem1 form with ln n replaced by ln(1/delta)
};

enum class KMode { Points, FailureProbability };

struct SparsitySpec {
  double eps = 0.1;
  std::optional<double> n_points;
  std::optional<double> delta;
  std::size_t d = 0;
  double c_q = 1.0;
  double c_k = 1.0;
};

namespace detail {

inline void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw ParameterError("eps must lie in (0,1), got " + std::to_string(eps));
  }
}
inline void check_points(double n) {
  if (!(n >= 2.0) || !std::isfinite(n)) {
    throw ParameterError("n must be >= 2, got " + std::to_string(n));
  }
}
inline void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ParameterError("delta must lie in (0,1), got " + std::to_string(delta));
  }
}
inline void check_dim(std::size_t d) {
  if (d < 1) throw ParameterError("d must be >= 1");
}
inline void check_constant(double c, const char* name) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw ParameterError(std::string(name) + " must be a positive finite constant");
  }
}
inline double clamp_q(double q) { return std::clamp(q, kMinSparsity, 1.0); }

/// Shared shape of the upper and lower schedules with L = ln n or ln(1/delta).
inline double min_max_form(double eps, double L, double d) {
  return std::min(eps, (L / d) * std::max(1.0, eps * L / std::log(1.0 / eps)));
}

}  // namespace detail

inline double q_theorem1(double eps, double n, std::size_t d, double c_q = 1.0) {
  detail::check_eps(eps);
  detail::check_points(n);
  detail::check_dim(d);
  detail::check_constant(c_q, "c_q");
  return detail::clamp_q(c_q * detail::min_max_form(eps, std::log(n), static_cast<double>(d)));
}

inline double q_ailon_chazelle(double n, std::size_t d, double c_q = 1.0) {
  detail::check_points(n);
  detail::check_dim(d);
  detail::check_constant(c_q, "c_q");
  const double ln_n = std::log(n);
  return detail::clamp_q(c_q * ln_n * ln_n / static_cast<double>(d));
}

inline double q_lower_threshold(double eps, double delta, std::size_t d, double c_q = 1.0) {
  detail::check_eps(eps);
  detail::check_delta(delta);
  detail::check_dim(d);
  detail::check_constant(c_q, "c_q");
  return detail::clamp_q(c_q *
                         detail::min_max_form(eps, std::log(1.0 / delta), static_cast<double>(d)));
}

/// ceil(c_k eps^-2 ln n) in Points mode, ceil(c_k eps^-2 ln(1/delta)) otherwise.
inline std::size_t choose_k(double eps, double n_or_delta, double c_k, KMode mode) {
  detail::check_eps(eps);
  detail::check_constant(c_k, "c_k");
  double log_term = 0.0;
  if (mode == KMode::Points) {
    detail::check_points(n_or_delta);
    log_term = std::log(n_or_delta);
  } else {
    detail::check_delta(n_or_delta);
    log_term = std::log(1.0 / n_or_delta);
  }
  const double k = std::ceil(c_k * log_term / (eps * eps));
  return static_cast<std::size_t>(std::max(1.0, k));
}

inline double expected_nnz(std::size_t k, std::size_t d, double q) {
  return static_cast<double>(k) * static_cast<double>(d) * q;
}

/// q according to `scheduler`, reading n or delta from `spec` as the
/// scheduler requires.
inline double scheduled_q(Scheduler scheduler, const SparsitySpec& spec) {
  switch (scheduler) {
    case Scheduler::Theorem1:
      if (!spec.n_points) throw ParameterError("theorem1 scheduler requires n");
      return q_theorem1(spec.eps, *spec.n_points, spec.d, spec.c_q);
    case Scheduler::AilonChazelle:
      if (!spec.n_points) throw ParameterError("ac scheduler requires n");
      return q_ailon_chazelle(*spec.n_points, spec.d, spec.c_q);
    case Scheduler::LowerThreshold:
      if (!spec.delta) throw ParameterError("lower scheduler requires delta");
      return q_lower_threshold(spec.eps, *spec.delta, spec.d, spec.c_q);
  }
  throw ParameterError("unknown scheduler");
}

/// k from whichever of n / delta `spec` carries (exactly one must be set).
inline std::size_t scheduled_k(const SparsitySpec& spec) {
  if (spec.n_points.has_value() == spec.delta.has_value()) {
    throw ParameterError("exactly one of n and delta must be set to choose k");
  }
  return spec.n_points ? choose_k(spec.eps, *spec.n_points, spec.c_k, KMode::Points)
                       : choose_k(spec.eps, *spec.delta, spec.c_k, KMode::FailureProbability);
}

}  // namespace fastjl
