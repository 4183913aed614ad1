#pragma once

// One JSON object per line per experiment:
//   {experiment, params, trials, successes, p_hat, wilson_lo, wilson_hi,
//    bound, verdict, seed, wall_time_ms, details, config}
// p_hat and the Wilson endpoints are null for exact (non-sampled) checks;
// bound is null when the experiment has none.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fastjl/stats.hpp"
#include "fastjl/verify.hpp"

namespace fastjl {

using Json = nlohmann::ordered_json;

struct ExperimentRecord {
  std::string experiment;
  Json params = Json::object();
  std::optional<TailEstimate> estimate;
  std::optional<double> bound;
  Verdict verdict = Verdict::Info;
  std::uint64_t seed = 0;
  double wall_time_ms = 0.0;
  Json details = Json::object();

  [[nodiscard]] Json to_json(const Json& config) const {
    Json j;
    j["experiment"] = experiment;
    j["params"] = params;
    if (estimate) {
      j["trials"] = estimate->trials;
      j["successes"] = estimate->successes;
      j["p_hat"] = estimate->p_hat;
      j["wilson_lo"] = estimate->wilson_lo;
      j["wilson_hi"] = estimate->wilson_hi;
    } else {
      j["trials"] = 0;
      j["successes"] = 0;
      j["p_hat"] = nullptr;
      j["wilson_lo"] = nullptr;
      j["wilson_hi"] = nullptr;
    }
    j["bound"] = bound ? Json(*bound) : Json(nullptr);
    j["verdict"] = std::string(to_string(verdict));
    j["seed"] = seed;
    j["wall_time_ms"] = wall_time_ms;
    j["details"] = details;
    j["config"] = config;
    return j;
  }
};

/// Times `fn` and stores the elapsed wall time on the record it returns.
template <typename Fn>
ExperimentRecord timed(Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentRecord rec = fn();
  rec.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

inline std::string to_json_lines(const std::vector<ExperimentRecord>& records, const Json& config) {
  std::string out;
  for (const auto& r : records) {
    out += r.to_json(config).dump();
    out.push_back('\n');
  }
  return out;
}

inline bool any_failed(const std::vector<ExperimentRecord>& records) {
  for (const auto& r : records) {
    if (r.verdict == Verdict::Fail) return true;
  }
  return false;
}

}  // namespace fastjl
