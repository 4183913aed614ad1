#pragma once

// Apply-path timings: dense Gaussian JL against Fast JL at two sparsity levels.
// Sampling (setup) is timed separately since it is amortized over many vectors.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fastjl/dataset.hpp"
#include "fastjl/error.hpp"
#include "fastjl/instances.hpp"
#include "fastjl/parallel.hpp"
#include "fastjl/transform.hpp"

namespace fastjl {

enum class BenchMethod { Dense, FastJL_AC, FastJL_New };

constexpr std::string_view to_string(BenchMethod m) noexcept {
  switch (m) {
    case BenchMethod::Dense: return "Dense";
    case BenchMethod::FastJL_AC: return "FastJL_AC";
    case BenchMethod::FastJL_New: return "FastJL_New";
  }
  return "?";
}

struct BenchConfig {
  BenchMethod method = BenchMethod::Dense;
  std::size_t d = 0;
  std::size_t k = 0;
  double q = 1.0;  ///< ignored for Dense; 0 gives an empty projection
};

struct BenchRecord {
  BenchMethod method = BenchMethod::Dense;
  std::size_t d = 0;
  std::size_t k = 0;
  double q = 0.0;
  std::uint64_t nnz_observed = 0;
  std::uint64_t reps = 0;
  double median_embed_time_ns = 0.0;
  double setup_time_ns = 0.0;
};

struct BenchOptions {
  std::uint64_t reps = 7;
  std::uint64_t seed = 0;
  unsigned workers = 1;          ///< >1 splits each timed batch across threads
  double target_batch_ns = 2e6;  ///< inner iterations per rep are sized to roughly this
};

inline std::uint64_t count_nnz(const SparseProjection& P) noexcept { return P.nnz(); }

namespace detail {

using BenchClock = std::chrono::steady_clock;

inline double elapsed_ns(BenchClock::time_point start) {
  return std::chrono::duration<double, std::nano>(BenchClock::now() - start).count();
}

/// Median per-call time of apply(scratch_index), after warm-up.
template <typename Apply>
double median_apply_ns(Apply&& apply, const BenchOptions& opt) {
  // warm-up, also used to size the batch
  apply(0);
  auto start = BenchClock::now();
  apply(0);
  const double one = std::max(1.0, elapsed_ns(start));
  const auto inner = static_cast<std::size_t>(std::clamp(opt.target_batch_ns / one, 1.0, 100000.0));
  const unsigned workers = std::max(1u, opt.workers);
  std::vector<double> per_call;
  per_call.reserve(opt.reps);
  for (std::uint64_t r = 0; r < opt.reps; ++r) {
    start = BenchClock::now();
    if (workers == 1) {
      for (std::size_t i = 0; i < inner; ++i) apply(0);
    } else {
      parallel_for(workers, workers, [&](std::size_t w) {
        for (std::size_t i = w; i < inner; i += workers) apply(w);
      });
    }
    per_call.push_back(elapsed_ns(start) / static_cast<double>(inner));
  }
  std::nth_element(per_call.begin(), per_call.begin() + per_call.size() / 2, per_call.end());
  return per_call[per_call.size() / 2];
}

}  // namespace detail

inline BenchRecord run_bench_one(const BenchConfig& cfg, const BenchOptions& opt,
                                 std::uint64_t seed) {
  if (cfg.k < 1 || cfg.k > cfg.d) {
    throw ParameterError("bench: need 1 <= k <= d, got k=" + std::to_string(cfg.k) +
                         " d=" + std::to_string(cfg.d));
  }
  if (!is_power_of_two(cfg.d)) throw DimensionError("bench: d must be a power of two");
  if (opt.reps < 3) throw ParameterError("bench: reps must be >= 3");
  if (cfg.method != BenchMethod::Dense && !(cfg.q >= 0.0 && cfg.q <= 1.0)) {
    throw ParameterError("bench: q must lie in [0,1]");
  }
  const unsigned workers = std::max(1u, opt.workers);
  const std::vector<double> x = random_unit_vector(cfg.d, derive_seed(seed, 7));
  std::vector<std::vector<double>> scratch(workers, std::vector<double>(cfg.d));
  std::vector<std::vector<double>> out(workers, std::vector<double>(cfg.k));

  BenchRecord rec;
  rec.method = cfg.method;
  rec.d = cfg.d;
  rec.k = cfg.k;
  rec.reps = opt.reps;

  if (cfg.method == BenchMethod::Dense) {
    rec.q = 1.0;
    const auto start = detail::BenchClock::now();
    const DenseProjection A(cfg.k, cfg.d, seed);
    rec.setup_time_ns = detail::elapsed_ns(start);
    rec.nnz_observed = static_cast<std::uint64_t>(cfg.k) * cfg.d;
    rec.median_embed_time_ns =
        detail::median_apply_ns([&](std::size_t w) { A.apply_into(x, out[w]); }, opt);
  } else {
    rec.q = cfg.q;
    const auto start = detail::BenchClock::now();
    const FastJlTransform map(
        sample_signs(cfg.d, derive_seed(seed, 0)),
        cfg.q > 0.0 ? sample_projection(cfg.k, cfg.d, cfg.q, derive_seed(seed, 1))
                    : SparseProjection::empty(cfg.k, cfg.d));
    rec.setup_time_ns = detail::elapsed_ns(start);
    rec.nnz_observed = count_nnz(map.projection());
    rec.median_embed_time_ns = detail::median_apply_ns(
        [&](std::size_t w) { map.apply_into(x, scratch[w], out[w]); }, opt);
  }
  return rec;
}

/// Config i is sampled from derive_seed(opt.seed, i).
inline std::vector<BenchRecord> run_bench(const std::vector<BenchConfig>& configs,
                                          const BenchOptions& opt) {
  std::vector<BenchRecord> records;
  records.reserve(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    records.push_back(run_bench_one(configs[i], opt, derive_seed(opt.seed, i)));
  }
  return records;
}

inline constexpr std::string_view kBenchCsvHeader = "method,d,k,q,nnz,reps,median_ns,setup_ns";

inline std::string bench_csv(const std::vector<BenchRecord>& records) {
  std::string out(kBenchCsvHeader);
  out.push_back('\n');
  for (const auto& r : records) {
    out += to_string(r.method);
    out += ',' + std::to_string(r.d) + ',' + std::to_string(r.k) + ',';
    detail::append_double(out, r.q);
    out += ',' + std::to_string(r.nnz_observed) + ',' + std::to_string(r.reps) + ',';
    detail::append_double(out, r.median_embed_time_ns);
    out.push_back(',');
    detail::append_double(out, r.setup_time_ns);
    out.push_back('\n');
  }
  return out;
}

}  // namespace fastjl
