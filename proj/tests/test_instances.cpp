#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "fastjl/instances.hpp"
#include "fastjl/stats.hpp"
#include "fastjl/verify.hpp"
#include "oracles.hpp"

using namespace fastjl;

TEST(HardVector, Levels) {
  EXPECT_EQ(hard_vector(0.01, 64).l, 1u);
  EXPECT_NEAR(hard_instance_level_expr(0.01), 1.4966, 1e-4);
  EXPECT_EQ(hard_vector(1e-6, 64).l, 3u);
  EXPECT_NEAR(hard_instance_level_expr(1e-6), 3.243, 1e-3);
  EXPECT_EQ(hard_vector(0.05, 64).l, 0u);
  EXPECT_EQ(hard_vector(0.1, 64).l, 0u);

  const auto h = hard_vector(1e-6, 64);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(h.x[i], 1.0 / std::sqrt(8.0));
  for (std::size_t i = 8; i < 64; ++i) EXPECT_EQ(h.x[i], 0.0);
}

TEST(HardVector, LevelBracketsExpression) {
  for (double delta : {0.1, 0.05, 0.01, 1e-3, 1e-4, 1e-6, 1e-9}) {
    const auto h = hard_vector(delta, 1024);
    const double e = hard_instance_level_expr(delta);
    EXPECT_LE(h.l, e);
    EXPECT_LE(e, h.l + 1.0);
    EXPECT_GE(h.sign_event_probability(), std::sqrt(2.0 * delta) - 1e-15);
  }
}

TEST(HardVector, EightDimensionalSupport) {
  const auto h = hard_vector(0.01, 8);
  ASSERT_EQ(h.l, 1u);
  EXPECT_EQ(h.predicted_support, (std::vector<std::size_t>{0, 2, 4, 6}));
  const auto u = oracle::matvec(oracle::hadamard(8), 8, h.x);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(u[i], i % 2 == 0 ? 0.5 : 0.0, 1e-15);
}

TEST(HardVector, SupportMatchesDenseMultiply) {
  for (std::size_t d = 8; d <= 4096; d *= 2) {
    const auto h_dense = oracle::hadamard(d);
    for (double delta : {0.1, 0.01, 1e-4, 1e-6}) {
      const double e = hard_instance_level_expr(delta);
      if (std::ldexp(1.0, static_cast<int>(std::floor(e))) > static_cast<double>(d)) {
        EXPECT_THROW(hard_vector(delta, d), InstanceError);
        continue;
      }
      const auto h = hard_vector(delta, d);
      EXPECT_NEAR(std::sqrt(std::inner_product(h.x.begin(), h.x.end(), h.x.begin(), 0.0)), 1.0,
                  1e-12);
      const auto u = oracle::matvec(h_dense, d, h.x);
      std::vector<std::size_t> support;
      for (std::size_t i = 0; i < d; ++i) {
        if (std::abs(u[i]) > 1e-9) {
          support.push_back(i);
          EXPECT_NEAR(u[i], std::sqrt(std::ldexp(1.0, h.l) / d), 1e-12);
        }
      }
      EXPECT_EQ(support.size(), d >> h.l);
      EXPECT_EQ(support, h.predicted_support);
      EXPECT_EQ(h.m, d >> h.l);
    }
    if (d >= 512) d *= 2;  // keep the dense oracle affordable
  }
}

TEST(HardVector, IndexRuleAboveDirectLimit) {
  const auto h = hard_vector(1e-4, 8192);
  ASSERT_EQ(h.l, 2u);
  ASSERT_EQ(h.predicted_support.size(), 2048u);
  for (std::size_t j = 0; j < h.predicted_support.size(); ++j) {
    EXPECT_EQ(h.predicted_support[j], 4 * j);
  }
  auto u = h.x;
  fwht_inplace(u);
  for (std::size_t i = 0; i < u.size(); ++i) {
    EXPECT_NEAR(std::abs(u[i]), i % 4 == 0 ? h.predicted_magnitude : 0.0, 1e-12);
  }
}

TEST(HardVector, Errors) {
  EXPECT_THROW(hard_vector(0.5, 64), ParameterError);
  EXPECT_THROW(hard_vector(0.0, 64), ParameterError);
  EXPECT_THROW(hard_vector(0.2, 64), ParameterError);  // negative level
  EXPECT_THROW(hard_vector(0.01, 48), DimensionError);
  EXPECT_THROW(hard_vector(1e-6, 4), InstanceError);
}

TEST(SignEvent, FrequencyWithinThreeSigma) {
  for (unsigned l : {1u, 2u}) {
    const auto est = sign_event_rate(l, 100000, 77 + l);
    const double p = std::ldexp(1.0, -(1 << l));
    EXPECT_NEAR(est.p_hat, p, 3.0 * std::sqrt(p * (1 - p) / 1e5)) << "l=" << l;
  }
}

TEST(RandomUnit, NormalizedDeterministicCentered) {
  const auto a = random_unit_vector(64, 3);
  EXPECT_NEAR(std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0)), 1.0, 1e-12);
  EXPECT_EQ(a, random_unit_vector(64, 3));
  EXPECT_NE(a, random_unit_vector(64, 4));

  const int draws = 10000;
  std::vector<double> mean(64, 0.0);
  for (int s = 0; s < draws; ++s) {
    const auto v = random_unit_vector(64, s);
    for (std::size_t i = 0; i < 64; ++i) mean[i] += v[i] / draws;
  }
  // each coordinate has variance 1/d; 3.5 sigma keeps 64 simultaneous checks honest
  const double sigma = std::sqrt(1.0 / 64 / draws);
  for (double m : mean) EXPECT_LT(std::abs(m), 3.5 * sigma);
}

TEST(RandomUnit, SparseAndBasis) {
  const auto v = random_sparse_unit_vector(128, 5, 1);
  EXPECT_EQ(std::count_if(v.begin(), v.end(), [](double x) { return x != 0.0; }), 5);
  EXPECT_NEAR(std::inner_product(v.begin(), v.end(), v.begin(), 0.0), 1.0, 1e-12);
  const auto e = basis_vector(4, 2);
  EXPECT_EQ(e, (std::vector<double>{0, 0, 1, 0}));
  EXPECT_THROW(basis_vector(4, 4), ParameterError);
  EXPECT_THROW(random_sparse_unit_vector(4, 5, 1), ParameterError);
}
