#pragma once

// Monte Carlo and exact checks of the concentration statements behind the
// sparse Fast JL analysis.
//
// Every randomized routine takes a master seed; trial t draws from
// derive_seed(master, t) only, so results do not depend on the worker count.
// Probabilistic upper bounds are compared against the Wilson lower end of the
// estimate (a bound must not sit below the plausible range), probabilistic
// lower bounds against the Wilson upper end.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fastjl/error.hpp"
#include "fastjl/instances.hpp"
#include "fastjl/parallel.hpp"
#include "fastjl/random.hpp"
#include "fastjl/sparsity.hpp"
#include "fastjl/stats.hpp"
#include "fastjl/transform.hpp"

namespace fastjl {

enum class Verdict { Pass, Fail, Vacuous, Skipped, Info };

constexpr std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Vacuous: return "VACUOUS";
    case Verdict::Skipped: return "SKIPPED";
    case Verdict::Info: return "INFO";
  }
  return "?";
}

namespace detail {

/// Inverse-CDF sampler for Binomial(m, q) over a precomputed table; one
/// uniform per draw.
class BinomialSampler {
 public:
  BinomialSampler(std::uint64_t m, double q) : m_(m), q_(q) {
    if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("BinomialSampler: q must lie in [0,1]");
    if (q == 0.0 || q == 1.0) return;
    if (m > (std::uint64_t{1} << 26)) throw ParameterError("BinomialSampler: m too large");
    const double lq = std::log(q);
    const double lp = std::log1p(-q);
    std::vector<double> logs(m + 1);
    double top = -INFINITY;
    for (std::uint64_t j = 0; j <= m; ++j) {
      logs[j] = log_choose(m, j) + static_cast<double>(j) * lq + static_cast<double>(m - j) * lp;
      top = std::max(top, logs[j]);
    }
    cdf_.resize(m + 1);
    CompensatedSum acc;
    for (std::uint64_t j = 0; j <= m; ++j) {
      acc.add(std::exp(logs[j] - top));
      cdf_[j] = acc.value();
    }
  }

  std::uint64_t operator()(Xoshiro256& rng) const {
    if (q_ == 0.0) return 0;
    if (q_ == 1.0) return m_;
    const double u = rng.uniform_open0() * cdf_.back();
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::uint64_t>(m_, static_cast<std::uint64_t>(it - cdf_.begin()));
  }

 private:
  std::uint64_t m_;
  double q_;
  std::vector<double> cdf_;  ///< unnormalized running sums of the pmf
};

template <typename Pred>
TailEstimate count_trials(std::uint64_t trials, unsigned workers, Pred&& event) {
  if (trials < 1) throw ParameterError("trials must be >= 1");
  std::vector<std::uint8_t> hit(trials, 0);
  parallel_for(trials, workers, [&](std::size_t t) { hit[t] = event(t) ? 1 : 0; });
  std::uint64_t successes = 0;
  for (auto h : hit) successes += h;
  return TailEstimate::from_counts(successes, trials);
}

inline double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Embedding distortion
// ---------------------------------------------------------------------------

/// Produces the vector embedded in one trial, given a per-trial seed.
using VectorSource = std::function<std::vector<double>(std::uint64_t trial_seed)>;

inline VectorSource fixed_vector_source(std::vector<double> x) {
  return [x = std::move(x)](std::uint64_t) { return x; };
}

inline VectorSource random_unit_source(std::size_t d) {
  return [d](std::uint64_t seed) { return random_unit_vector(d, seed); };
}

/// Fraction of trials in which a fresh (D, P) distorts the source vector's
/// norm beyond params.eps under params.norm_criterion.
inline TailEstimate estimate_failure_rate(const JlParams& params, const VectorSource& source,
                                          std::uint64_t trials, unsigned workers = 1) {
  params.validate();
  return detail::count_trials(trials, workers, [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(params.seed, t);
    const std::vector<double> x = source(derive_seed(trial_seed, 2));
    const double in2 = detail::squared_norm(x);
    if (!(in2 > 0.0)) throw ParameterError("estimate_failure_rate: zero input vector");
    JlParams p = params;
    p.seed = trial_seed;
    const auto y = FastJlTransform::sample(p).apply(x);
    return params.distorted(y.squared_norm() / in2);
  });
}

/// Pairwise mode: one (D, P) per trial, failure when any pairwise distance
/// among `points` is distorted.
inline TailEstimate estimate_pairwise_failure_rate(const JlParams& params,
                                                   const std::vector<std::vector<double>>& points,
                                                   std::uint64_t trials, unsigned workers = 1) {
  params.validate();
  if (points.size() < 2) throw ParameterError("pairwise mode needs at least two points");
  const std::size_t n = points.size();
  std::vector<double> in2(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    if (points[a].size() != params.d) throw DimensionError("pairwise: point length != d");
    for (std::size_t b = a + 1; b < n; ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < params.d; ++j) {
        const double diff = points[a][j] - points[b][j];
        s += diff * diff;
      }
      if (!(s > 0.0)) throw ParameterError("pairwise: duplicate points have zero distance");
      in2[a * n + b] = s;
    }
  }
  return detail::count_trials(trials, workers, [&](std::size_t t) {
    JlParams p = params;
    p.seed = derive_seed(params.seed, t);
    const auto map = FastJlTransform::sample(p);
    std::vector<std::vector<double>> ys;
    ys.reserve(n);
    for (const auto& x : points) ys.push_back(map.apply(x).values);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < params.k; ++i) {
          const double diff = ys[a][i] - ys[b][i];
          s += diff * diff;
        }
        if (params.distorted(s / in2[a * n + b])) return true;
      }
    }
    return false;
  });
}

/// Fraction of sign draws D for which max_i |(H D x)_i| > sqrt(threshold_c ln(n) / d).
inline TailEstimate coord_exceedance_rate(std::span<const double> x, double threshold_c, double n,
                                          std::uint64_t trials, std::uint64_t seed,
                                          unsigned workers = 1) {
  const std::size_t d = x.size();
  if (!is_power_of_two(d)) throw DimensionError("coord_exceedance_rate: d must be a power of two");
  if (std::abs(detail::squared_norm(x) - 1.0) > 1e-9) {
    throw ParameterError("coord_exceedance_rate: x must have unit norm");
  }
  if (!(threshold_c > 0.0)) throw ParameterError("coord_exceedance_rate: threshold_c must be > 0");
  if (!(n >= 2.0)) throw ParameterError("coord_exceedance_rate: n must be >= 2");
  const double limit = std::sqrt(threshold_c * std::log(n) / static_cast<double>(d));
  return detail::count_trials(trials, workers, [&](std::size_t t) {
    std::vector<double> u(x.begin(), x.end());
    apply_signs_inplace(u, sample_signs(d, derive_seed(seed, t)));
    fwht_inplace(u);
    double top = 0.0;
    for (double v : u) top = std::max(top, std::abs(v));
    return top > limit;
  });
}

// ---------------------------------------------------------------------------
// Z statistics for the worst-case transformed vector (m coordinates 1/sqrt(m))
// ---------------------------------------------------------------------------

struct ZSample {
  double max_z = 0.0;
  double sum_z = 0.0;
  double sum_zsq = 0.0;
};

/// Each trial draws Z_1..Z_k i.i.d. Binomial(m, q) / m.
inline std::vector<ZSample> simulate_z_statistics(std::uint64_t m, double q, std::uint64_t k,
                                                  std::uint64_t trials, std::uint64_t seed,
                                                  unsigned workers = 1) {
  if (m < 1) throw ParameterError("simulate_z_statistics: m must be >= 1");
  if (k < 1) throw ParameterError("simulate_z_statistics: k must be >= 1");
  if (!(q > 0.0 && q <= 1.0)) throw ParameterError("simulate_z_statistics: q must lie in (0,1]");
  if (trials < 1) throw ParameterError("simulate_z_statistics: trials must be >= 1");
  std::vector<ZSample> out(trials);
  const double inv_m = 1.0 / static_cast<double>(m);
  const detail::BinomialSampler binomial(m, q);
  parallel_for(trials, workers, [&](std::size_t t) {
    Xoshiro256 rng = make_stream(seed, t);
    ZSample s;
    for (std::uint64_t i = 0; i < k; ++i) {
      const double z = static_cast<double>(binomial(rng)) * inv_m;
      s.max_z = std::max(s.max_z, z);
      s.sum_z += z;
      s.sum_zsq += z * z;
    }
    out[t] = s;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Analytic tail bounds
// ---------------------------------------------------------------------------

enum class Lemma {
  MaxZ,       ///< P[max_i Z_i > q/(2 alpha)] <= k exp(-m q ln(1/alpha) / (32 alpha))
  SingleZ,    ///< P[Z > t] < (t / (e q))^{-m t}
  SumZsq,     ///< P[sum Z_i^2 > t] < 14 exp(-m sqrt(t) ln(sqrt(t/8)/(e q)) / (200*44*2^{5/2}))
  SumZsqAlt,  ///< P[sum Z_i^2 > t] <= 3 n^{-4 c1}
};

constexpr std::string_view to_string(Lemma l) noexcept {
  switch (l) {
    case Lemma::MaxZ: return "MaxZ";
    case Lemma::SingleZ: return "SingleZ";
    case Lemma::SumZsq: return "SumZsq";
    case Lemma::SumZsqAlt: return "SumZsqAlt";
  }
  return "?";
}

struct BoundSpec {
  Lemma lemma = Lemma::MaxZ;
  std::map<std::string, double> params;

  [[nodiscard]] bool has(const std::string& name) const { return params.contains(name); }

  [[nodiscard]] double get(const std::string& name) const {
    const auto it = params.find(name);
    if (it == params.end()) {
      throw ParameterError(std::string(to_string(lemma)) + " bound: missing parameter '" + name +
                           "'");
    }
    return it->second;
  }
};

struct DomainCheck {
  bool satisfied = true;
  std::string reason;
};

/// The (m, k, q) implied by the parameters of the alternative sum-of-squares
/// bound: m = round(c2 d / ln n), k = ceil(c1 eps^-2 ln n), q = c1 eps.
struct ZShape {
  std::uint64_t m = 0;
  std::uint64_t k = 0;
  double q = 0.0;
};

inline ZShape sumzsq_alt_shape(const BoundSpec& spec) {
  const double ln_n = std::log(spec.get("n"));
  const double c1 = spec.get("c1");
  const double eps = spec.get("eps");
  ZShape s;
  s.m = static_cast<std::uint64_t>(
      std::max(1.0, std::round(spec.get("c2") * spec.get("d") / ln_n)));
  s.k = static_cast<std::uint64_t>(std::ceil(c1 * ln_n / (eps * eps)));
  s.q = c1 * eps;
  return s;
}

/// Lower end of the admissible t range for SumZsq / SumZsqAlt.
inline double sumzsq_min_t(double q, double k) {
  return 64.0 * 24.0 * std::exp(3.0) * q * q * k;
}
inline double sumzsq_alt_min_t(double c1, double n) {
  return 2.0 * c1 * c1 * c1 * std::exp(8.0) * std::log(n);
}

/// Evaluates the lemma's hypotheses for the given parameters.
inline DomainCheck check_domain(const BoundSpec& spec) {
  auto fail = [](std::string why) { return DomainCheck{false, std::move(why)}; };
  switch (spec.lemma) {
    case Lemma::MaxZ: {
      const double alpha = spec.get("alpha");
      if (!(alpha > 0.0 && alpha <= 0.25)) return fail("alpha must lie in (0, 1/4]");
      return {};
    }
    case Lemma::SingleZ: {
      if (!(spec.get("t") > spec.get("q"))) return fail("t must exceed q");
      return {};
    }
    case Lemma::SumZsq: {
      const double q = spec.get("q");
      const double m = spec.get("m");
      if (spec.get("t") < sumzsq_min_t(q, spec.get("k"))) return fail("t below 64*24*e^3*q^2*k");
      if (q < 8.0 / (std::numbers::e * m)) return fail("q below 8/(e m)");
      return {};
    }
    case Lemma::SumZsqAlt: {
      for (const char* name : {"eps", "c2", "t", "d"}) {
        if (!spec.has(name)) return fail(std::string("missing '") + name + "'");
      }
      const double c1 = spec.get("c1");
      const double c2 = spec.get("c2");
      const double eps = spec.get("eps");
      if (c1 < 1.0 / c2) return fail("c1 below 1/c2");
      // stricter of the two groupings: eps <= 1/(4 e c1)
      if (!(eps > 0.0 && eps <= 1.0 / (4.0 * std::numbers::e * c1))) {
        return fail("eps above 1/(4 e c1)");
      }
      if (spec.get("t") < sumzsq_alt_min_t(c1, spec.get("n"))) return fail("t below 2 c1^3 e^8 ln n");
      return {};
    }
  }
  return fail("unknown lemma");
}

/// Right-hand side of the lemma. May exceed 1.
inline double lemma_bound(const BoundSpec& spec) {
  constexpr double e = std::numbers::e;
  switch (spec.lemma) {
    case Lemma::MaxZ: {
      const double m = spec.get("m"), q = spec.get("q"), k = spec.get("k");
      const double alpha = spec.get("alpha");
      return k * std::exp(-m * q * std::log(1.0 / alpha) / (32.0 * alpha));
    }
    case Lemma::SingleZ: {
      const double m = spec.get("m"), q = spec.get("q"), t = spec.get("t");
      return std::pow(t / (e * q), -m * t);
    }
    case Lemma::SumZsq: {
      const double m = spec.get("m"), q = spec.get("q"), t = spec.get("t");
      (void)spec.get("k");
      const double denom = 200.0 * 44.0 * std::pow(2.0, 2.5);
      return 14.0 * std::exp(-m * std::sqrt(t) * std::log(std::sqrt(t / 8.0) / (e * q)) / denom);
    }
    case Lemma::SumZsqAlt: {
      return 3.0 * std::pow(spec.get("n"), -4.0 * spec.get("c1"));
    }
  }
  throw ParameterError("unknown lemma");
}

/// The event a lemma bounds: statistic > threshold.
struct LemmaEvent {
  Lemma lemma = Lemma::MaxZ;
  double threshold = 0.0;

  friend bool operator==(const LemmaEvent&, const LemmaEvent&) = default;
};

inline LemmaEvent lemma_event(const BoundSpec& spec) {
  switch (spec.lemma) {
    case Lemma::MaxZ: return {spec.lemma, spec.get("q") / (2.0 * spec.get("alpha"))};
    case Lemma::SingleZ:
    case Lemma::SumZsq:
    case Lemma::SumZsqAlt: return {spec.lemma, spec.get("t")};
  }
  throw ParameterError("unknown lemma");
}

struct EventEstimate {
  LemmaEvent event;
  TailEstimate estimate;
};

/// Simulates Z statistics with the lemma's (m, q, k) and counts its event.
inline EventEstimate estimate_lemma_event(const BoundSpec& spec, std::uint64_t trials,
                                          std::uint64_t seed, unsigned workers = 1) {
  const LemmaEvent event = lemma_event(spec);
  std::uint64_t m = 0, k = 1;
  double q = 0.0;
  if (spec.lemma == Lemma::SumZsqAlt) {
    const ZShape s = sumzsq_alt_shape(spec);
    m = s.m;
    k = s.k;
    q = std::min(1.0, s.q);
  } else {
    m = static_cast<std::uint64_t>(spec.get("m"));
    q = spec.get("q");
    if (spec.lemma != Lemma::SingleZ) k = static_cast<std::uint64_t>(spec.get("k"));
  }
  const auto samples = simulate_z_statistics(m, q, k, trials, seed, workers);
  std::uint64_t hits = 0;
  for (const auto& s : samples) {
    const double stat = spec.lemma == Lemma::MaxZ || spec.lemma == Lemma::SingleZ ? s.max_z
                                                                                  : s.sum_zsq;
    if (stat > event.threshold) ++hits;
  }
  return {event, TailEstimate::from_counts(hits, trials)};
}

struct BoundCheck {
  Verdict verdict = Verdict::Info;
  double bound = 0.0;
  DomainCheck domain;
  TailEstimate estimate;
};

/// Verdict for an upper bound against an estimate: VACUOUS when bound >= 1,
/// else PASS iff wilson_lo <= bound.
inline Verdict upper_bound_verdict(double bound, const TailEstimate& estimate) {
  if (bound >= 1.0) return Verdict::Vacuous;
  return estimate.wilson_lo <= bound ? Verdict::Pass : Verdict::Fail;
}

inline BoundCheck check_bound(const BoundSpec& spec, const EventEstimate& measured) {
  const LemmaEvent expected = lemma_event(spec);
  if (!(measured.event == expected)) {
    throw EventMismatchError("check_bound: estimate measured " +
                             std::string(to_string(measured.event.lemma)) + " > " +
                             std::to_string(measured.event.threshold) + " but the bound is for " +
                             std::string(to_string(expected.lemma)) + " > " +
                             std::to_string(expected.threshold));
  }
  BoundCheck out;
  out.domain = check_domain(spec);
  out.bound = lemma_bound(spec);
  out.estimate = measured.estimate;
  out.verdict = out.domain.satisfied ? upper_bound_verdict(out.bound, measured.estimate)
                                     : Verdict::Skipped;
  return out;
}

// ---------------------------------------------------------------------------
// Exact / deterministic checks used by the lower-bound argument
// ---------------------------------------------------------------------------

struct ReverseChernoffCheck {
  Verdict verdict = Verdict::Info;
  std::uint64_t threshold = 0;  ///< integer s with the tail P[X >= s]
  double exact = 0.0;
  double bound = 0.0;
};

/// P[Bin(r,q) >= (1+alpha) q r] >= exp(-2 alpha^2 q r) / 4, with the real
/// threshold rounded up.
inline ReverseChernoffCheck reverse_chernoff_check(std::uint64_t r, double q, double alpha) {
  if (!(q > 0.0 && q <= 0.25)) throw DomainError("reverse_chernoff_check: requires 0 < q <= 1/4");
  if (!(alpha >= 0.0 && alpha * q <= 0.25)) {
    throw DomainError("reverse_chernoff_check: requires 0 <= alpha q <= 1/4");
  }
  if (r < 1) throw ParameterError("reverse_chernoff_check: r must be >= 1");
  const double real = (1.0 + alpha) * q * static_cast<double>(r);
  // ceil, ignoring round-off just above an integer
  const double s = std::ceil(real - 1e-9 * std::max(1.0, real));
  ReverseChernoffCheck out;
  out.threshold = static_cast<std::uint64_t>(std::max(0.0, s));
  out.exact = out.threshold > r ? 0.0 : binomial_tail_exact(r, q, out.threshold);
  out.bound = 0.25 * std::exp(-2.0 * alpha * alpha * q * static_cast<double>(r));
  out.verdict = out.exact >= out.bound ? Verdict::Pass : Verdict::Fail;
  return out;
}

struct ChiSquareLowerTailCheck {
  Verdict verdict = Verdict::Info;
  TailEstimate estimate;
  double bound = 0.0;
};

/// Estimates P[sum_i u_i (g_i^2 - 1) >= x] and compares its Wilson upper end
/// with c3 exp(-C3 x^2 / ||u||^2). c3 and C3 are unknown absolute constants
/// supplied by the caller.
inline ChiSquareLowerTailCheck chisq_lower_tail_check(std::span<const double> weights, double x,
                                                      std::uint64_t trials, double c3, double C3,
                                                      std::uint64_t seed, unsigned workers = 1) {
  if (weights.empty()) throw ParameterError("chisq_lower_tail_check: no weights");
  for (double w : weights) {
    if (!(w >= 0.0)) throw ParameterError("chisq_lower_tail_check: weights must be non-negative");
  }
  if (!(x >= 0.0)) throw ParameterError("chisq_lower_tail_check: x must be >= 0");
  const double norm2 = detail::squared_norm(weights);
  if (!(norm2 > 0.0)) throw ParameterError("chisq_lower_tail_check: all weights are zero");
  ChiSquareLowerTailCheck out;
  out.estimate = detail::count_trials(trials, workers, [&](std::size_t t) {
    Xoshiro256 rng = make_stream(seed, t);
    std::normal_distribution<double> gauss;
    double s = 0.0;
    for (double w : weights) {
      const double g = gauss(rng);
      s += w * (g * g - 1.0);
    }
    return s >= x;
  });
  out.bound = c3 * std::exp(-C3 * x * x / norm2);
  out.verdict = out.estimate.wilson_hi >= out.bound ? Verdict::Pass : Verdict::Fail;
  return out;
}

struct GaussianSquareCheck {
  double exact = 0.0;
  double bound = 0.0;
  Verdict verdict = Verdict::Info;
};

/// P[N^2 >= x] >= 1 - sqrt(1 - exp(-2x/pi)).
inline GaussianSquareCheck gaussian_square_tail_check(double x) {
  if (!(x >= 0.0)) throw ParameterError("gaussian_square_tail_check: x must be >= 0");
  GaussianSquareCheck out;
  out.exact = gaussian_square_sf(x);
  out.bound = 1.0 - std::sqrt(-std::expm1(-2.0 * x / std::numbers::pi));
  out.verdict = out.exact >= out.bound ? Verdict::Pass : Verdict::Fail;
  return out;
}

/// (1 - x)^a <= 1 - a x / 2 for 0 <= x <= 1, 0 <= a x <= 1.
inline Verdict elementary_ineq_check(double x, double a) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("elementary_ineq_check: x must lie in [0,1]");
  if (!(a * x >= 0.0 && a * x <= 1.0)) {
    throw DomainError("elementary_ineq_check: a x must lie in [0,1]");
  }
  return std::pow(1.0 - x, a) <= 1.0 - a * x / 2.0 + 1e-12 ? Verdict::Pass : Verdict::Fail;
}

/// 100 x 100 admissible points: x = i/99, a = (j/99) / max(x, 1/99), so a x <= 1.
inline std::vector<std::pair<double, double>> elementary_ineq_grid() {
  std::vector<std::pair<double, double>> grid;
  grid.reserve(100 * 100);
  for (int i = 0; i < 100; ++i) {
    const double x = i / 99.0;
    for (int j = 0; j < 100; ++j) grid.emplace_back(x, (j / 99.0) / std::max(x, 1.0 / 99.0));
  }
  return grid;
}

/// Frequency of D x = x for the level-l hard vector: the first 2^l signs all +1.
inline TailEstimate sign_event_rate(unsigned l, std::uint64_t trials, std::uint64_t seed,
                                    unsigned workers = 1) {
  if (l > 5) throw ParameterError("sign_event_rate: l must be <= 5");
  if (trials < 1) throw ParameterError("sign_event_rate: trials must be >= 1");
  const std::size_t block = std::size_t{1} << l;
  const std::size_t d = std::max<std::size_t>(block, 2);
  std::vector<std::uint8_t> hit(trials);
  parallel_for(trials, workers, [&](std::size_t t) {
    const SignDiagonal D = sample_signs(d, derive_seed(seed, t));
    hit[t] = std::all_of(D.signs.begin(), D.signs.begin() + static_cast<std::ptrdiff_t>(block),
                         [](std::int8_t s) { return s > 0; });
  });
  return TailEstimate::from_counts(static_cast<std::uint64_t>(std::count(hit.begin(), hit.end(), 1)),
                                   trials);
}

/// Empirical E[exp(C (N^2 - 1))] against its closed form (1 - 2C)^{-1/2} e^{-C}.
/// With C = 0.3 this is the sub-exponential premise E[exp(C Y)] <= e.
struct MgfCheck {
  double c = 0.0;
  SampleMoments moments;
  double exact = 0.0;
  [[nodiscard]] double z_score() const {
    const double se = moments.standard_error();
    return se > 0.0 ? (moments.mean - exact) / se : 0.0;
  }
};

inline MgfCheck subexponential_mgf_check(double c, std::uint64_t draws, std::uint64_t seed,
                                         unsigned workers = 1) {
  if (!(c > 0.0 && c < 0.5)) throw ParameterError("subexponential_mgf_check: need 0 < C < 1/2");
  if (draws < 2) throw ParameterError("subexponential_mgf_check: draws must be >= 2");
  // one stream per block of draws keeps per-draw overhead low
  constexpr std::uint64_t kBlock = 4096;
  const std::uint64_t blocks = (draws + kBlock - 1) / kBlock;
  std::vector<double> values(draws);
  parallel_for(blocks, workers, [&](std::size_t b) {
    Xoshiro256 rng = make_stream(seed, b);
    std::normal_distribution<double> gauss;
    const std::uint64_t end = std::min<std::uint64_t>(draws, (b + 1) * kBlock);
    for (std::uint64_t i = b * kBlock; i < end; ++i) {
      const double g = gauss(rng);
      values[i] = std::exp(c * (g * g - 1.0));
    }
  });
  MgfCheck out;
  out.c = c;
  out.moments = sample_moments(values);
  out.exact = std::exp(-c) / std::sqrt(1.0 - 2.0 * c);
  return out;
}

// ---------------------------------------------------------------------------
// Lower-bound witness on the hard instance
// ---------------------------------------------------------------------------

struct WitnessTrial {
  double first_term = 0.0;  ///< Z_1 N_1^2 / q
  double rest_sum = 0.0;    ///< sum_{i>=2} Z_i N_i^2 / q
  double total = 0.0;       ///< ||P u||^2
  bool failed = false;
};

struct WitnessReport {
  double eps = 0.0;
  double delta = 0.0;
  std::size_t d = 0;
  double q = 0.0;
  unsigned l = 0;
  std::uint64_t m = 0;
  std::uint64_t k = 0;
  NormCriterion criterion = NormCriterion::SquaredNorm;
  std::vector<WitnessTrial> trials;
  TailEstimate failure;
  /// failing trials with first_term > eps k and rest_sum >= (1 - 3 eps)(k - 1)
  std::uint64_t mechanism_failures = 0;
  /// trials with first_term >= 5 ln(1/delta) / eps
  std::uint64_t large_first_term = 0;
  /// trials with rest_sum >= (1 - 3 eps)(k - 1)
  std::uint64_t rest_concentrated = 0;

  [[nodiscard]] double mechanism_fraction() const {
    return failure.successes ? static_cast<double>(mechanism_failures) /
                                   static_cast<double>(failure.successes)
                             : 0.0;
  }
};

/// Simulates ||P u||^2 = sum_i Z_i N_i^2 / q for u = H x of the hard instance,
/// conditioned on the sign event D x = x, with Z_i = Binomial(m, q) / m and
/// k = ceil(eps^-2 ln(1/delta)).
inline WitnessReport lower_bound_witness(double eps, double delta, std::size_t d, double q,
                                         std::uint64_t trials, std::uint64_t seed,
                                         unsigned workers = 1,
                                         NormCriterion criterion = NormCriterion::SquaredNorm) {
  const HardInstance inst = hard_vector(delta, d);
  if (!(q > 0.0 && q <= 1.0)) throw ParameterError("lower_bound_witness: q must lie in (0,1]");
  if (trials < 1) throw ParameterError("lower_bound_witness: trials must be >= 1");
  WitnessReport rep;
  rep.eps = eps;
  rep.delta = delta;
  rep.d = d;
  rep.q = q;
  rep.l = inst.l;
  rep.m = inst.m;
  rep.k = choose_k(eps, delta, 1.0, KMode::FailureProbability);
  rep.criterion = criterion;
  rep.trials.resize(trials);

  JlParams band;
  band.eps = eps;
  band.norm_criterion = criterion;
  const double kd = static_cast<double>(rep.k);
  const double inv_m = 1.0 / static_cast<double>(rep.m);
  const detail::BinomialSampler binomial(rep.m, q);
  parallel_for(trials, workers, [&](std::size_t t) {
    Xoshiro256 rng = make_stream(seed, t);
    std::normal_distribution<double> gauss;
    WitnessTrial w;
    double total = 0.0;
    for (std::uint64_t i = 0; i < rep.k; ++i) {
      const double z = static_cast<double>(binomial(rng)) * inv_m;
      const double g = gauss(rng);
      const double term = z * g * g / q;
      if (i == 0) {
        w.first_term = term;
      } else {
        w.rest_sum += term;
      }
      total += term;
    }
    w.total = total;
    w.failed = band.distorted(total / kd);
    rep.trials[t] = w;
  });

  const double first_cut = eps * kd;
  const double rest_cut = (1.0 - 3.0 * eps) * (kd - 1.0);
  const double large_cut = 5.0 * std::log(1.0 / delta) / eps;
  std::uint64_t failures = 0;
  for (const auto& w : rep.trials) {
    const bool rest_ok = w.rest_sum >= rest_cut;
    if (rest_ok) ++rep.rest_concentrated;
    if (w.first_term >= large_cut) ++rep.large_first_term;
    if (w.failed) {
      ++failures;
      if (w.first_term > first_cut && rest_ok) ++rep.mechanism_failures;
    }
  }
  rep.failure = TailEstimate::from_counts(failures, trials);
  return rep;
}

struct TotalMassReport {
  unsigned l = 0;
  std::uint64_t k = 0;
  std::uint64_t r = 0;     ///< binomial trials k d / 2^l
  double threshold = 0.0;  ///< k + deviation
  double deviation = 0.0;
  SampleMoments mass;      ///< moments of T
  TailEstimate exceed;     ///< fraction of trials with T at or beyond the threshold
};

/// T = (2^l / (d q)) Binomial(k d / 2^l, q), the scaled total mass sum_i Z_i / q.
/// Counts T >= k + sqrt(ln(1/(4^4 delta)) 2^l k / (8 d q)). When the log term
/// is not positive the deviation is 0 and the event is T > k.
inline TotalMassReport total_mass_statistic(double eps, double delta, std::size_t d, double q,
                                            std::uint64_t trials, std::uint64_t seed,
                                            unsigned workers = 1) {
  const HardInstance inst = hard_vector(delta, d);
  if (!(q > 0.0 && q <= 1.0)) throw ParameterError("total_mass_statistic: q must lie in (0,1]");
  if (trials < 1) throw ParameterError("total_mass_statistic: trials must be >= 1");
  TotalMassReport rep;
  rep.l = inst.l;
  rep.k = choose_k(eps, delta, 1.0, KMode::FailureProbability);
  rep.r = rep.k * inst.m;
  const double block = static_cast<double>(inst.block());
  const double dq = static_cast<double>(d) * q;
  const double kd = static_cast<double>(rep.k);
  const double log_term = std::log(1.0 / (256.0 * delta));
  rep.deviation = log_term > 0.0 ? std::sqrt(log_term * block * kd / (8.0 * dq)) : 0.0;
  rep.threshold = kd + rep.deviation;

  std::vector<double> mass(trials);
  const detail::BinomialSampler binomial(rep.r, q);
  parallel_for(trials, workers, [&](std::size_t t) {
    Xoshiro256 rng = make_stream(seed, t);
    mass[t] = block / dq * static_cast<double>(binomial(rng));
  });
  std::uint64_t hits = 0;
  for (double T : mass) {
    if (rep.deviation > 0.0 ? T >= rep.threshold : T > rep.threshold) ++hits;
  }
  rep.mass = sample_moments(mass);
  rep.exceed = TailEstimate::from_counts(hits, trials);
  return rep;
}

}  // namespace fastjl
