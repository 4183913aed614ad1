#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "fastjl/error.hpp"

namespace fastjl {

inline constexpr double kWilsonZ95 = 1.96;

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Sample mean, unbiased variance and standard error of the mean.
struct SampleMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;

  [[nodiscard]] double standard_error() const {
    return count > 0 ? std::sqrt(variance / static_cast<double>(count)) : 0.0;
  }
};

inline SampleMoments sample_moments(std::span<const double> xs) {
  SampleMoments m;
  m.count = xs.size();
  if (xs.empty()) return m;
  CompensatedSum s;
  for (double x : xs) s.add(x);
  m.mean = s.value() / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    CompensatedSum ss;
    for (double x : xs) ss.add((x - m.mean) * (x - m.mean));
    m.variance = ss.value() / static_cast<double>(xs.size() - 1);
  }
  return m;
}

/// Wilson score interval for successes / trials.
inline std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                                 double z = kWilsonZ95) {
  if (trials == 0) throw ParameterError("wilson_interval: trials must be >= 1");
  if (successes > trials) throw ParameterError("wilson_interval: successes exceed trials");
  if (!(z > 0.0)) throw ParameterError("wilson_interval: z must be positive");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = (z / denom) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  double hi = successes == trials ? 1.0 : std::min(1.0, center + half);
  lo = std::min(lo, p);
  hi = std::max(hi, p);
  return {lo, hi};
}

/// Monte Carlo probability estimate with its 95% Wilson interval.
struct TailEstimate {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;
  double p_hat = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;

  static TailEstimate from_counts(std::uint64_t successes, std::uint64_t trials) {
    const auto [lo, hi] = wilson_interval(successes, trials);
    return {successes, trials, static_cast<double>(successes) / static_cast<double>(trials), lo,
            hi};
  }

  [[nodiscard]] bool brackets(double p) const noexcept { return wilson_lo <= p && p <= wilson_hi; }

  friend bool operator==(const TailEstimate&, const TailEstimate&) = default;
};

// ---------------------------------------------------------------------------
// Exact reference distributions
// ---------------------------------------------------------------------------

/// P[chi^2_dof <= x].
inline double chi_square_cdf(double dof, double x) {
  if (!(dof > 0.0)) throw ParameterError("chi_square_cdf: dof must be positive");
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(dof / 2.0, x / 2.0);
}

/// P[chi^2_dof > x].
inline double chi_square_sf(double dof, double x) {
  if (!(dof > 0.0)) throw ParameterError("chi_square_sf: dof must be positive");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

/// P[N^2 >= x] for N ~ N(0,1), i.e. erfc(sqrt(x/2)).
inline double gaussian_square_sf(double x) {
  if (x < 0.0) throw ParameterError("gaussian_square_sf: x must be >= 0");
  return std::erfc(std::sqrt(x / 2.0));
}

/// ln C(r, j).
inline double log_choose(std::uint64_t r, std::uint64_t j) {
  return std::lgamma(static_cast<double>(r) + 1.0) - std::lgamma(static_cast<double>(j) + 1.0) -
         std::lgamma(static_cast<double>(r - j) + 1.0);
}

/// P[Binomial(r, q) >= s], summing log-space terms with a shared max shift.
inline double binomial_tail_exact(std::uint64_t r, double q, std::uint64_t s) {
  if (r > 10000) throw ParameterError("binomial_tail_exact: r must be <= 10^4");
  if (s > r) throw ParameterError("binomial_tail_exact: s must be <= r");
  if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("binomial_tail_exact: q must lie in [0,1]");
  if (s == 0) return 1.0;
  if (q == 0.0) return 0.0;
  if (q == 1.0) return 1.0;
  const double lq = std::log(q);
  const double lp = std::log1p(-q);
  std::vector<double> logs;
  logs.reserve(r - s + 1);
  double top = -INFINITY;
  for (std::uint64_t j = s; j <= r; ++j) {
    const double t = log_choose(r, j) + static_cast<double>(j) * lq +
                     static_cast<double>(r - j) * lp;
    logs.push_back(t);
    top = std::max(top, t);
  }
  CompensatedSum acc;
  for (double t : logs) acc.add(std::exp(t - top));
  return std::min(1.0, std::exp(top) * acc.value());
}

}  // namespace fastjl
