#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "fastjl/parallel.hpp"
#include "fastjl/random.hpp"

using namespace fastjl;

TEST(Random, DeriveSeedSeparatesIndices) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 8; ++s) {
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(s, i));
  }
  EXPECT_EQ(seen.size(), 8000u);
  static_assert(derive_seed(1, 2) == derive_seed(1, 2));
}

TEST(Random, StreamsAreReproducible) {
  Xoshiro256 a = make_stream(42, 7);
  Xoshiro256 b = make_stream(42, 7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Random, UniformOpen0StaysInRangeWithCorrectMean) {
  Xoshiro256 rng(5);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform_open0();
    ASSERT_GT(u, 0.0);
    ASSERT_LE(u, 1.0);
    sum += u;
  }
  // sd of the mean is sqrt(1/12/n)
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Parallel, ResultsIndependentOfWorkerCount) {
  auto run = [](unsigned workers) {
    std::vector<std::uint64_t> out(1000);
    parallel_for(out.size(), workers, [&](std::size_t i) { out[i] = make_stream(9, i)(); });
    return out;
  };
  EXPECT_EQ(run(1), run(3));
  EXPECT_EQ(run(1), run(8));
}

TEST(Parallel, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t i) {
                              if (i == 57) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}
