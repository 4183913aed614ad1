#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fastjl/sparsity.hpp"
#include "fastjl/stats.hpp"
#include "fastjl/verify.hpp"
#include "oracles.hpp"

using namespace fastjl;

namespace {

JlParams params(std::size_t d, std::size_t k, double q, double eps, std::uint64_t seed) {
  JlParams p;
  p.d = d;
  p.k = k;
  p.q = q;
  p.eps = eps;
  p.seed = seed;
  return p;
}

}  // namespace

TEST(FailureRate, DeterministicReplay) {
  const auto p = params(64, 8, 0.3, 0.2, 5);
  const auto a = estimate_failure_rate(p, random_unit_source(64), 500, 1);
  const auto b = estimate_failure_rate(p, random_unit_source(64), 500, 3);
  EXPECT_EQ(a, b);
}

TEST(FailureRate, ChiSquareOneOracle) {
  const auto p = params(2, 1, 1.0, 0.5, 2024);
  const auto est = estimate_failure_rate(p, fixed_vector_source({1.0, 0.0}), 100000, 0);
  EXPECT_TRUE(est.brackets(oracle::chi1_outside(0.5, 1.5))) << est.p_hat;
}

TEST(FailureRate, NormCriterionOracle) {
  auto p = params(2, 1, 1.0, 0.3, 88);
  p.norm_criterion = NormCriterion::Norm;
  const auto est = estimate_failure_rate(p, fixed_vector_source({0.0, 1.0}), 50000, 0);
  EXPECT_TRUE(est.brackets(oracle::chi1_outside(0.49, 1.69))) << est.p_hat;
}

TEST(FailureRate, GenerousConstantsGiveSmallFailure) {
  const std::size_t k = choose_k(0.25, 64, 4.0, KMode::Points);
  const double q = q_theorem1(0.25, 64, 1024, 4.0);
  const auto est = estimate_failure_rate(params(1024, k, q, 0.25, 31), random_unit_source(1024),
                                         10000, 0);
  EXPECT_LT(est.p_hat, 0.05);
}

TEST(FailureRate, ZeroVectorRejected) {
  EXPECT_THROW(
      estimate_failure_rate(params(4, 2, 1.0, 0.1, 1), fixed_vector_source({0, 0, 0, 0}), 5),
      ParameterError);
}

TEST(FailureRate, PairwiseAtFullDensityAndLargeK) {
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 5; ++i) pts.push_back(random_unit_vector(64, i));
  const auto est = estimate_pairwise_failure_rate(params(64, 64, 1.0, 0.9, 3), pts, 200, 0);
  EXPECT_LT(est.p_hat, 0.05);
  const auto bad = estimate_pairwise_failure_rate(params(64, 1, 1.0, 0.05, 3), pts, 200, 0);
  EXPECT_GT(bad.p_hat, 0.9);
}

TEST(CoordExceedance, BasisVectorIsFlat) {
  const auto x = basis_vector(256, 17);
  const auto est = coord_exceedance_rate(x, 1.0, 10.0, 2000, 3);
  EXPECT_EQ(est.successes, 0u);
  EXPECT_EQ(est, coord_exceedance_rate(x, 1.0, 10.0, 2000, 3, 4));
}

TEST(CoordExceedance, RandomUnitRarelyExceeds) {
  const auto x = random_unit_vector(1024, 8);
  const auto est = coord_exceedance_rate(x, 8.0, 1e4, 10000, 12, 0);
  EXPECT_LT(est.p_hat, 1e-2);
}

TEST(ZStatistics, DegenerateAndInvariants) {
  for (const auto& s : simulate_z_statistics(1, 1.0, 5, 100, 1)) {
    EXPECT_EQ(s.max_z, 1.0);
    EXPECT_EQ(s.sum_z, 5.0);
    EXPECT_EQ(s.sum_zsq, 5.0);
  }
  for (const auto& s : simulate_z_statistics(16, 0.3, 12, 5000, 2)) {
    ASSERT_GE(s.max_z, 0.0);
    ASSERT_LE(s.max_z, 1.0);
    ASSERT_LE(s.sum_zsq, s.sum_z + 1e-12);
    ASSERT_LE(s.sum_z, 12.0 + 1e-12);
  }
  EXPECT_THROW(simulate_z_statistics(0, 0.5, 1, 1, 1), ParameterError);
  EXPECT_THROW(simulate_z_statistics(4, 0.0, 1, 1, 1), ParameterError);
}

TEST(ZStatistics, Moments) {
  const double m = 20, q = 0.15;
  const std::uint64_t k = 6, trials = 100000;
  const auto samples = simulate_z_statistics(20, q, k, trials, 9, 0);
  std::vector<double> sums, singles;
  for (const auto& s : samples) sums.push_back(s.sum_z);
  for (const auto& s : simulate_z_statistics(20, q, 1, trials, 10, 0)) singles.push_back(s.sum_z);
  const auto ms = sample_moments(sums);
  const double var_z = q * (1 - q) / m;
  EXPECT_NEAR(ms.mean, k * q, 3.0 * std::sqrt(k * var_z / trials));
  EXPECT_NEAR(sample_moments(singles).variance, var_z, 0.2 * var_z);
}

TEST(BinomialSampler, MatchesPmf) {
  // Pearson chi-square against the exact pmf over bins with expected count >= 5
  const std::uint64_t m = 30, n = 200000;
  const double q = 0.2;
  const detail::BinomialSampler sampler(m, q);
  std::vector<double> counts(m + 1, 0.0);
  Xoshiro256 rng(123);
  for (std::uint64_t i = 0; i < n; ++i) counts[sampler(rng)] += 1;
  const auto pmf = oracle::binomial_pmf(m, q);
  double stat = 0.0;
  int bins = 0;
  for (std::uint64_t j = 0; j <= m; ++j) {
    const double e = static_cast<double>(pmf[j]) * n;
    if (e < 5) continue;
    stat += (counts[j] - e) * (counts[j] - e) / e;
    ++bins;
  }
  EXPECT_GT(chi_square_sf(bins - 1, stat), 1e-3) << stat << " on " << bins << " bins";
  Xoshiro256 r2(1);
  EXPECT_EQ(detail::BinomialSampler(7, 0.0)(r2), 0u);
  EXPECT_EQ(detail::BinomialSampler(7, 1.0)(r2), 7u);
}

TEST(LemmaBound, HandEvaluations) {
  const BoundSpec maxz{Lemma::MaxZ, {{"m", 100}, {"q", 0.5}, {"k", 10}, {"alpha", 0.25}}};
  EXPECT_DOUBLE_EQ(lemma_bound(maxz), 10.0 * std::exp(-50.0 * std::log(4.0) / 8.0));
  EXPECT_NEAR(lemma_bound(maxz), 1.7246e-3, 2e-3 * 1.7246e-3);  // hand-rounded
  const BoundSpec single{Lemma::SingleZ, {{"m", 10}, {"q", 0.1}, {"t", 0.5}}};
  EXPECT_DOUBLE_EQ(lemma_bound(single), std::pow(5.0 / std::numbers::e, -5.0));
  EXPECT_NEAR(lemma_bound(single), 0.04751, 1e-3 * 0.04751);  // hand-rounded
  EXPECT_NEAR(lemma_bound({Lemma::SumZsqAlt, {{"n", 1000}, {"c1", 1}}}), 3e-12, 1e-24);
  EXPECT_THROW(lemma_bound({Lemma::MaxZ, {{"m", 100}, {"q", 0.5}, {"k", 10}}}), ParameterError);
}

TEST(LemmaBound, DomainChecks) {
  EXPECT_FALSE(check_domain({Lemma::MaxZ, {{"m", 1}, {"q", 0.5}, {"k", 1}, {"alpha", 0.3}}}).satisfied);
  EXPECT_FALSE(check_domain({Lemma::SingleZ, {{"m", 1}, {"q", 0.5}, {"t", 0.5}}}).satisfied);
  const double tmin = sumzsq_min_t(0.25, 8);
  EXPECT_TRUE(check_domain({Lemma::SumZsq, {{"m", 64}, {"q", 0.25}, {"k", 8}, {"t", tmin}}}).satisfied);
  EXPECT_FALSE(
      check_domain({Lemma::SumZsq, {{"m", 64}, {"q", 0.25}, {"k", 8}, {"t", tmin * 0.99}}}).satisfied);
  EXPECT_FALSE(check_domain({Lemma::SumZsq, {{"m", 16}, {"q", 0.05}, {"k", 8}, {"t", 1e9}}}).satisfied);
  const BoundSpec alt{Lemma::SumZsqAlt,
                      {{"n", 100}, {"c1", 1}, {"c2", 1}, {"eps", 0.09}, {"d", 1024},
                       {"t", sumzsq_alt_min_t(1, 100)}}};
  EXPECT_TRUE(check_domain(alt).satisfied);
  BoundSpec wide = alt;
  wide.params["eps"] = 0.1;  // above 1/(4e)
  EXPECT_FALSE(check_domain(wide).satisfied);
}

TEST(CheckBound, Verdicts) {
  EXPECT_EQ(upper_bound_verdict(1.5, TailEstimate::from_counts(90, 100)), Verdict::Vacuous);
  EXPECT_EQ(upper_bound_verdict(1e-3, TailEstimate::from_counts(0, 100)), Verdict::Pass);
  EXPECT_EQ(upper_bound_verdict(1e-3, TailEstimate::from_counts(50, 100)), Verdict::Fail);
}

TEST(CheckBound, MaxZGridPoint) {
  const BoundSpec spec{Lemma::MaxZ, {{"m", 100}, {"q", 0.5}, {"k", 10}, {"alpha", 0.25}}};
  const auto measured = estimate_lemma_event(spec, 1000000, 4, 0);
  const auto c = check_bound(spec, measured);
  EXPECT_EQ(c.verdict, Verdict::Pass);
  EXPECT_DOUBLE_EQ(measured.event.threshold, 1.0);
}

TEST(CheckBound, EventMismatchAndSkipped) {
  const BoundSpec spec{Lemma::MaxZ, {{"m", 16}, {"q", 0.5}, {"k", 8}, {"alpha", 0.25}}};
  EventEstimate wrong{{Lemma::MaxZ, 0.5}, TailEstimate::from_counts(0, 10)};
  EXPECT_THROW(check_bound(spec, wrong), EventMismatchError);
  EventEstimate other{{Lemma::SingleZ, 1.0}, TailEstimate::from_counts(0, 10)};
  EXPECT_THROW(check_bound(spec, other), EventMismatchError);
  const BoundSpec bad{Lemma::MaxZ, {{"m", 16}, {"q", 0.5}, {"k", 8}, {"alpha", 0.5}}};
  EXPECT_EQ(check_bound(bad, {lemma_event(bad), TailEstimate::from_counts(0, 10)}).verdict,
            Verdict::Skipped);
}

TEST(ReverseChernoff, Examples) {
  const auto c = reverse_chernoff_check(16, 0.25, 0.5);
  EXPECT_EQ(c.threshold, 6u);
  EXPECT_NEAR(c.bound, 0.25 * std::exp(-2.0), 1e-15);
  EXPECT_NEAR(c.exact, oracle::binomial_upper(16, 0.25, 6), 1e-13);
  EXPECT_EQ(c.verdict, Verdict::Pass);
  const auto at_mean = reverse_chernoff_check(64, 0.25, 0.0);
  EXPECT_EQ(at_mean.threshold, 16u);
  EXPECT_EQ(at_mean.bound, 0.25);
  EXPECT_EQ(at_mean.verdict, Verdict::Pass);
  EXPECT_THROW(reverse_chernoff_check(16, 0.3, 0.0), DomainError);
  EXPECT_THROW(reverse_chernoff_check(16, 0.25, 1.5), DomainError);
}

TEST(ReverseChernoff, SmallMeanCounterexample) {
  // Bin(4, 0.05): P[X >= 0.2] = P[X >= 1] = 1 - 0.95^4 < 1/4
  const auto c = reverse_chernoff_check(4, 0.05, 0.0);
  EXPECT_EQ(c.threshold, 1u);
  EXPECT_NEAR(c.exact, 1.0 - std::pow(0.95, 4), 1e-15);
  EXPECT_EQ(c.verdict, Verdict::Fail);
}

TEST(ChiSquareLowerTail, Examples) {
  const std::vector<double> one{1.0};
  const auto a = chisq_lower_tail_check(one, 0.0, 100000, 0.1, 2.0, 6, 0);
  EXPECT_TRUE(a.estimate.brackets(chi_square_sf(1, 1.0))) << a.estimate.p_hat;
  EXPECT_EQ(a.verdict, Verdict::Pass);
  const std::vector<double> four{1, 1, 1, 1};
  EXPECT_GE(chisq_lower_tail_check(four, 0.0, 20000, 0.1, 2.0, 7).estimate.p_hat, 0.3);
  const auto far = chisq_lower_tail_check(one, 1000.0, 1000, 0.1, 2.0, 8);
  EXPECT_EQ(far.estimate.successes, 0u);
  EXPECT_EQ(far.verdict, Verdict::Pass);  // bound underflows to 0
  EXPECT_EQ(chisq_lower_tail_check(one, 30.0, 1000, 1.0, 1e-6, 8).verdict, Verdict::Fail);
  EXPECT_THROW(chisq_lower_tail_check(std::vector<double>{-1.0}, 0.0, 10, 0.1, 2, 1),
               ParameterError);
}

TEST(GaussianSquareTail, Examples) {
  const auto zero = gaussian_square_tail_check(0.0);
  EXPECT_EQ(zero.exact, 1.0);
  EXPECT_EQ(zero.bound, 1.0);
  EXPECT_EQ(zero.verdict, Verdict::Pass);
  const auto one = gaussian_square_tail_check(1.0);
  EXPECT_NEAR(one.exact, 0.31731, 1e-5);
  EXPECT_NEAR(one.bound, 0.31376, 1e-5);
  EXPECT_EQ(one.verdict, Verdict::Pass);
  EXPECT_NEAR(gaussian_square_tail_check(4.0).exact, 0.04550, 1e-5);
  EXPECT_THROW(gaussian_square_tail_check(-0.1), ParameterError);
}

TEST(ElementaryInequality, Examples) {
  EXPECT_EQ(elementary_ineq_check(0.0, 7.0), Verdict::Pass);
  EXPECT_EQ(elementary_ineq_check(0.5, 2.0), Verdict::Pass);
  EXPECT_EQ(elementary_ineq_check(1.0, 1.0), Verdict::Pass);
  EXPECT_THROW(elementary_ineq_check(1.5, 0.1), DomainError);
  EXPECT_THROW(elementary_ineq_check(0.5, 3.0), DomainError);
  const auto grid = elementary_ineq_grid();
  EXPECT_EQ(grid.size(), 10000u);
  for (const auto& [x, a] : grid) ASSERT_EQ(elementary_ineq_check(x, a), Verdict::Pass);
}

TEST(Mgf, ClosedForm) {
  const auto c = subexponential_mgf_check(0.3, 4096 * 4, 3);
  EXPECT_NEAR(c.exact, 1.0 / std::sqrt(0.4) * std::exp(-0.3), 1e-15);
  EXPECT_NEAR(c.exact, 1.1713365, 1e-7);
  EXPECT_LT(c.exact, std::numbers::e);
  EXPECT_EQ(c.moments.count, 4096u * 4);
  EXPECT_THROW(subexponential_mgf_check(0.5, 100, 1), ParameterError);
  // blocks make the result independent of worker count
  EXPECT_EQ(c.moments.mean, subexponential_mgf_check(0.3, 4096 * 4, 3, 3).moments.mean);
}

TEST(Witness, DegenerateFullDensityIsChiSquare) {
  // delta = 0.05 gives l = 0, so m = d; q = 1 makes every Z_i = 1
  const auto w = lower_bound_witness(0.25, 0.05, 64, 1.0, 50000, 5, 0);
  ASSERT_EQ(w.k, 48u);
  ASSERT_EQ(w.m, 64u);
  const double k = 48;
  const double want = 1.0 - (chi_square_cdf(k, 1.25 * k) - chi_square_cdf(k, 0.75 * k));
  EXPECT_TRUE(w.failure.brackets(want)) << w.failure.p_hat << " vs " << want;
  for (const auto& t : w.trials) ASSERT_NEAR(t.first_term + t.rest_sum, t.total, 1e-9);
}

TEST(Witness, Replay) {
  const auto a = lower_bound_witness(0.25, 0.01, 256, 0.01, 2000, 9, 1);
  const auto b = lower_bound_witness(0.25, 0.01, 256, 0.01, 2000, 9, 4);
  EXPECT_EQ(a.failure, b.failure);
  EXPECT_EQ(a.mechanism_failures, b.mechanism_failures);
  EXPECT_EQ(a.l, 1u);
  EXPECT_EQ(a.m, 128u);
  EXPECT_THROW(lower_bound_witness(0.25, 1e-9, 4, 0.1, 10, 1), InstanceError);
}

TEST(TotalMass, DegenerateAndMoments) {
  const auto full = total_mass_statistic(0.25, 0.01, 256, 1.0, 1000, 1);
  EXPECT_EQ(full.exceed.successes, 0u);
  EXPECT_DOUBLE_EQ(full.mass.mean, static_cast<double>(full.k));

  const double q = 0.01;
  const auto t = total_mass_statistic(0.25, 0.01, 256, q, 100000, 2, 0);
  const double k = static_cast<double>(t.k);
  const double var = k * 2.0 * (1 - q) / (256 * q);
  EXPECT_NEAR(t.mass.mean, k, 3.0 * std::sqrt(var / 1e5));
  EXPECT_NEAR(t.mass.variance, var, 0.2 * var);
}

TEST(TotalMass, DeviationUsesLogTermWhenPositive) {
  const double delta = 1e-4;
  const auto t = total_mass_statistic(0.25, delta, 1024, 0.01, 100, 3);
  const double block = std::ldexp(1.0, static_cast<int>(t.l));
  const double want = std::sqrt(std::log(1.0 / (256 * delta)) * block * t.k / (8 * 1024 * 0.01));
  EXPECT_NEAR(t.deviation, want, 1e-12);
  EXPECT_EQ(total_mass_statistic(0.25, 0.05, 1024, 0.01, 10, 3).deviation, 0.0);
}
