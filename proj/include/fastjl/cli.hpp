#pragma once

// Command-line front end: embed, verify-upper, verify-lemmas, verify-lower, bench.
//
// Precedence for every knob: command-line flag, then --config file (flat
// key=value, keys are flag names without the leading dashes), then the
// FASTJL_SEED environment variable (seed only), then the command default.
// The resolved configuration is echoed into every report; bench writes it to
// a sidecar "<report>.config" in the same key=value form, so either can be
// replayed with --config.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "fastjl/bench.hpp"
#include "fastjl/dataset.hpp"
#include "fastjl/error.hpp"
#include "fastjl/parallel.hpp"
#include "fastjl/report.hpp"
#include "fastjl/sparsity.hpp"
#include "fastjl/suites.hpp"
#include "fastjl/transform.hpp"

namespace fastjl {

enum class Command { Embed, VerifyUpper, VerifyLemmas, VerifyLower, Bench };

constexpr std::string_view to_string(Command c) noexcept {
  switch (c) {
    case Command::Embed: return "embed";
    case Command::VerifyUpper: return "verify-upper";
    case Command::VerifyLemmas: return "verify-lemmas";
    case Command::VerifyLower: return "verify-lower";
    case Command::Bench: return "bench";
  }
  return "?";
}

constexpr std::string_view to_string(Scheduler s) noexcept {
  switch (s) {
    case Scheduler::Theorem1: return "theorem1";
    case Scheduler::AilonChazelle: return "ac";
    case Scheduler::LowerThreshold: return "lower";
  }
  return "?";
}

/// Flags as given, before defaults and derived values are filled in.
struct RawOptions {
  std::string command;
  std::optional<std::string> config;
  std::optional<std::uint64_t> d, k, trials, seed, points, reps, mgf_draws, chisq_trials;
  std::optional<unsigned> workers;
  std::optional<double> eps, delta, n, q, reference_q, c_q, c_k, threshold_c, max_failure, c3, C3;
  std::optional<std::string> scheduler, criterion, in, out, report;
};

/// Fully resolved run configuration.
struct RunConfig {
  Command command = Command::VerifyUpper;
  std::size_t d = 0;
  std::size_t k = 0;
  double eps = 0.0;
  std::optional<double> delta;
  std::optional<double> n;
  double q = 0.0;
  std::optional<double> reference_q;
  std::optional<Scheduler> scheduler;  ///< how q was chosen, if not given directly
  double c_q = 1.0;
  double c_k = 1.0;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  NormCriterion criterion = NormCriterion::SquaredNorm;
  std::uint64_t points = 16;
  double threshold_c = 8.0;
  std::optional<double> max_failure;
  std::uint64_t reps = 7;
  std::uint64_t mgf_draws = 1000000;
  std::uint64_t chisq_trials = 100000;
  double c3 = 0.1;
  double C3 = 2.0;
  std::string in, out, report;

  /// Replayable echo. Keys are flag names; q is always the resolved value, so
  /// the scheduler is not repeated. I/O paths are left out.
  [[nodiscard]] Json echo() const {
    Json j;
    j["command"] = std::string(to_string(command));
    j["seed"] = seed;
    j["workers"] = workers;
    switch (command) {
      case Command::VerifyLemmas:
        j["trials"] = trials;
        j["mgf-draws"] = mgf_draws;
        j["chisq-trials"] = chisq_trials;
        j["c3"] = c3;
        j["C3"] = C3;
        return j;
      case Command::VerifyLower:
        j["d"] = d;
        j["eps"] = eps;
        j["delta"] = *delta;
        j["q"] = q;
        j["reference-q"] = *reference_q;
        j["c-q"] = c_q;
        j["criterion"] = detail::criterion_name(criterion);
        j["trials"] = trials;
        return j;
      default:
        break;
    }
    j["d"] = d;
    j["k"] = k;
    j["eps"] = eps;
    if (n) j["n"] = *n;
    if (delta) j["delta"] = *delta;
    j["q"] = q;
    j["c-q"] = c_q;
    j["c-k"] = c_k;
    if (command == Command::VerifyUpper) {
      j["criterion"] = detail::criterion_name(criterion);
      j["trials"] = trials;
      j["points"] = points;
      j["threshold-c"] = threshold_c;
      if (max_failure) j["max-failure"] = *max_failure;
    }
    if (command == Command::Bench) {
      j["reps"] = reps;
      if (reference_q) j["reference-q"] = *reference_q;
    }
    return j;
  }
};

/// Echo as key=value lines, dropping the command; accepted back by --config.
inline std::string echo_to_config_text(const Json& echo) {
  std::string out;
  for (const auto& [key, value] : echo.items()) {
    if (key == "command") continue;
    out += key;
    out.push_back('=');
    if (value.is_string()) {
      out += value.get<std::string>();
    } else if (value.is_number_float()) {
      detail::append_double(out, value.get<double>());
    } else {
      out += value.dump();
    }
    out.push_back('\n');
  }
  return out;
}

namespace detail {

inline std::string_view trim_view(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline void add_options(CLI::App& app, RawOptions& o) {
  app.add_option("command", o.command,
                 "embed | verify-upper | verify-lemmas | verify-lower | bench")
      ->required();
  app.add_option("--config", o.config, "key=value file; flags take precedence");
  app.add_option("--d", o.d, "dimension (power of two)");
  app.add_option("--k", o.k, "target dimension");
  app.add_option("--eps", o.eps, "distortion");
  app.add_option("--delta", o.delta, "failure probability");
  app.add_option("--n", o.n, "number of points");
  auto* q = app.add_option("--q", o.q, "sparsity of P");
  auto* sched = app.add_option("--scheduler", o.scheduler, "theorem1 | ac | lower");
  q->excludes(sched);
  app.add_option("--reference-q", o.reference_q, "comparison sparsity (verify-lower)");
  app.add_option("--c-q", o.c_q, "sparsity scheduler constant");
  app.add_option("--c-k", o.c_k, "target dimension constant");
  app.add_option("--trials", o.trials, "Monte Carlo trials");
  app.add_option("--seed", o.seed, "master seed (fallback: FASTJL_SEED)");
  app.add_option("--workers", o.workers, "worker threads; 0 = all cores");
  app.add_option("--criterion", o.criterion, "squared | norm");
  app.add_option("--points", o.points, "point-set size for pairwise checks");
  app.add_option("--threshold-c", o.threshold_c, "coordinate exceedance constant");
  app.add_option("--max-failure", o.max_failure, "turn failure-rate estimates into checks");
  app.add_option("--reps", o.reps, "timed repetitions per bench config");
  app.add_option("--mgf-draws", o.mgf_draws, "draws for the MGF check");
  app.add_option("--chisq-trials", o.chisq_trials, "trials for the chi-square lower tail");
  app.add_option("--c3", o.c3, "assumed chi-square lower tail constant c3");
  app.add_option("--C3", o.C3, "assumed chi-square lower tail constant C3");
  app.add_option("--in", o.in, "input vectors (.fjlv or .csv)");
  app.add_option("--out", o.out, "output vectors");
  app.add_option("--report", o.report, "report path; stdout when absent");
}

/// Reads a key=value config file into ordered (key, value) pairs.
inline std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::string& path, const CLI::App& app) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = trim_view(line);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config file '" + path + "' line " + std::to_string(lineno) +
                        ": expected key=value");
    }
    const std::string key(trim_view(s.substr(0, eq)));
    const std::string value(trim_view(s.substr(eq + 1)));
    if (key == "config" || key == "command" || key.empty() ||
        app.get_option_no_throw("--" + key) == nullptr) {
      throw ConfigError("unknown config key '" + key + "' in '" + path + "' line " +
                        std::to_string(lineno));
    }
    entries.emplace_back(key, value);
  }
  return entries;
}

inline Command parse_command(const std::string& s) {
  if (s == "embed") return Command::Embed;
  if (s == "verify-upper") return Command::VerifyUpper;
  if (s == "verify-lemmas") return Command::VerifyLemmas;
  if (s == "verify-lower") return Command::VerifyLower;
  if (s == "bench") return Command::Bench;
  throw ConfigError("unknown command '" + s + "'");
}

inline Scheduler parse_scheduler(const std::string& s) {
  if (s == "theorem1") return Scheduler::Theorem1;
  if (s == "ac") return Scheduler::AilonChazelle;
  if (s == "lower") return Scheduler::LowerThreshold;
  throw ConfigError("--scheduler: unknown scheduler '" + s + "' (theorem1 | ac | lower)");
}

inline NormCriterion parse_criterion(const std::string& s) {
  if (s == "squared") return NormCriterion::SquaredNorm;
  if (s == "norm") return NormCriterion::Norm;
  throw ConfigError("--criterion: unknown criterion '" + s + "' (squared | norm)");
}

[[noreturn]] inline void missing(const std::string& flag, const std::string& why) {
  throw ConfigError("missing required parameter --" + flag + " (" + why + ")");
}

inline void check_output_dir(const std::string& flag, const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw ConfigError("--" + flag + ": directory '" + parent.string() + "' does not exist");
  }
}

inline double resolve_q(const RawOptions& o, RunConfig& c) {
  if (o.q) return *o.q;
  const Scheduler s = c.scheduler.value_or(Scheduler::Theorem1);
  c.scheduler = s;
  SparsitySpec spec;
  spec.eps = c.eps;
  spec.d = c.d;
  spec.c_q = c.c_q;
  if (s == Scheduler::LowerThreshold) {
    if (!c.delta) missing("delta", "needed by scheduler lower");
    spec.delta = c.delta;
  } else {
    if (!c.n) missing("n", std::string("needed by scheduler ") + std::string(to_string(s)));
    spec.n_points = c.n;
  }
  return scheduled_q(s, spec);
}

inline std::size_t resolve_k(const RawOptions& o, const RunConfig& c) {
  if (o.k) return *o.k;
  if (c.n) return choose_k(c.eps, *c.n, c.c_k, KMode::Points);
  if (c.delta) return choose_k(c.eps, *c.delta, c.c_k, KMode::FailureProbability);
  missing("k", "or give --n or --delta to choose it");
}

}  // namespace detail

/// Applies defaults, derived values and path checks to parsed flags.
inline RunConfig resolve_config(const RawOptions& o) {
  RunConfig c;
  c.command = detail::parse_command(o.command);
  c.eps = o.eps.value_or(c.command == Command::Bench || c.command == Command::Embed ? 0.1 : 0.25);
  c.delta = o.delta;
  c.n = o.n;
  c.c_q = o.c_q.value_or(1.0);
  c.c_k = o.c_k.value_or(1.0);
  c.seed = o.seed.value_or(0);
  c.criterion = detail::parse_criterion(o.criterion.value_or("squared"));
  if (o.scheduler) c.scheduler = detail::parse_scheduler(*o.scheduler);
  c.points = o.points.value_or(16);
  c.threshold_c = o.threshold_c.value_or(8.0);
  c.max_failure = o.max_failure;
  c.reps = o.reps.value_or(7);
  c.mgf_draws = o.mgf_draws.value_or(1000000);
  c.chisq_trials = o.chisq_trials.value_or(100000);
  c.c3 = o.c3.value_or(0.1);
  c.C3 = o.C3.value_or(2.0);
  c.workers = resolve_workers(o.workers.value_or(c.command == Command::Bench ? 1u : 0u));
  c.report = o.report.value_or("");
  if (!c.report.empty()) detail::check_output_dir("report", c.report);

  switch (c.command) {
    case Command::Embed: {
      if (!o.in) detail::missing("in", "input vectors for embed");
      if (!o.out) detail::missing("out", "output path for embed");
      c.in = *o.in;
      c.out = *o.out;
      detail::check_output_dir("out", c.out);
      const VectorDataset ds = read_vectors(c.in);
      c.d = next_power_of_two(ds.d);
      if (o.d && *o.d != c.d) {
        throw ConfigError("--d " + std::to_string(*o.d) + " does not match the padded input " +
                          "dimension " + std::to_string(c.d));
      }
      c.q = detail::resolve_q(o, c);
      c.k = detail::resolve_k(o, c);
      break;
    }
    case Command::VerifyUpper:
    case Command::Bench: {
      const bool bench = c.command == Command::Bench;
      c.d = o.d.value_or(bench ? 4096 : 1024);
      if (!c.n && !c.delta) c.n = bench ? 1e6 : 64.0;
      c.trials = o.trials.value_or(10000);
      if (bench && !o.q && !c.scheduler) {
        // the sparse methods are run at both schedules; q is the new one
        c.scheduler = Scheduler::Theorem1;
        c.reference_q = q_ailon_chazelle(*c.n, c.d, c.c_q);
      } else if (bench) {
        c.reference_q = o.reference_q;
      }
      c.q = detail::resolve_q(o, c);
      c.k = detail::resolve_k(o, c);
      break;
    }
    case Command::VerifyLower: {
      c.d = o.d.value_or(1024);
      c.delta = o.delta.value_or(0.05);
      c.trials = o.trials.value_or(20000);
      const double threshold = q_lower_threshold(c.eps, *c.delta, c.d, c.c_q);
      c.reference_q = o.reference_q.value_or(threshold);
      if (o.q || c.scheduler) {
        c.q = detail::resolve_q(o, c);
      } else {
        c.q = threshold / 16.0;
      }
      break;
    }
    case Command::VerifyLemmas:
      c.trials = o.trials.value_or(100000);
      break;
  }
  if (c.command != Command::VerifyLemmas && !(c.q > 0.0 && c.q <= 1.0)) {
    throw ConfigError("--q must lie in (0,1], got " + std::to_string(c.q));
  }
  return c;
}

/// Thrown for --help; carries the text to print.
struct HelpRequested {
  std::string text;
};

/// Parses argv (argv[0] is the program name).
inline RunConfig parse_config(const std::vector<std::string>& argv) {
  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());

  auto parse = [](std::vector<std::string> list, RawOptions& o) -> std::unique_ptr<CLI::App> {
    auto app = std::make_unique<CLI::App>("Fast Johnson-Lindenstrauss toolkit", "fastjl");
    detail::add_options(*app, o);
    std::reverse(list.begin(), list.end());
    try {
      app->parse(list);
    } catch (const CLI::CallForHelp&) {
      throw HelpRequested{app->help()};
    } catch (const CLI::ExcludesError&) {
      throw ConfigError("conflicting parameters: --q and --scheduler are mutually exclusive");
    } catch (const CLI::ParseError& e) {
      throw ConfigError(e.what());
    }
    return app;
  };

  RawOptions first;
  auto app = parse(args, first);
  if (first.config) {
    const auto entries = detail::read_config_file(*first.config, *app);
    const bool q_slot_taken = app->count("--q") > 0 || app->count("--scheduler") > 0;
    std::set<std::string> seen;
    for (const auto& [key, value] : entries) {
      if (!seen.insert(key).second) {
        throw ConfigError("config key '" + key + "' appears more than once");
      }
      if (app->count("--" + key) > 0) continue;
      if ((key == "q" || key == "scheduler") && q_slot_taken) continue;
      args.push_back("--" + key);
      args.push_back(value);
    }
  }
  RawOptions merged;
  parse(args, merged);
  if (!merged.seed) {
    if (const char* env = std::getenv("FASTJL_SEED"); env != nullptr && *env != '\0') {
      std::uint64_t s = 0;
      const std::string_view v(env);
      const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
      if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError("FASTJL_SEED is not an unsigned integer: '" + std::string(v) + "'");
      }
      merged.seed = s;
    }
  }
  return resolve_config(merged);
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace detail {

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_file_atomically(path, text);
  }
}

inline std::vector<ExperimentRecord> run_records(const RunConfig& c) {
  switch (c.command) {
    case Command::VerifyUpper: {
      UpperSuiteOptions u;
      u.d = c.d;
      u.k = c.k;
      u.q = c.q;
      u.eps = c.eps;
      u.n = c.n.value_or(64.0);
      u.criterion = c.criterion;
      u.trials = c.trials;
      u.points = c.points;
      u.threshold_c = c.threshold_c;
      u.max_failure = c.max_failure;
      u.seed = c.seed;
      u.workers = c.workers;
      return run_upper_suite(u);
    }
    case Command::VerifyLemmas: {
      LemmaSuiteOptions l;
      l.trials = c.trials;
      l.mgf_draws = c.mgf_draws;
      l.chisq_trials = c.chisq_trials;
      l.c3 = c.c3;
      l.C3 = c.C3;
      l.seed = c.seed;
      l.workers = c.workers;
      return run_lemma_suite(l);
    }
    case Command::VerifyLower: {
      LowerSuiteOptions l;
      l.eps = c.eps;
      l.delta = *c.delta;
      l.d = c.d;
      l.q = c.q;
      l.reference_q = *c.reference_q;
      l.criterion = c.criterion;
      l.trials = c.trials;
      l.seed = c.seed;
      l.workers = c.workers;
      return run_lower_suite(l);
    }
    default:
      return {};
  }
}

}  // namespace detail

/// Runs a resolved config. 0: all checks PASS, VACUOUS, SKIPPED or INFO;
/// 1: some FAIL. Errors propagate as exceptions (see run_main).
inline int execute(const RunConfig& c, std::ostream& out = std::cout) {
  const Json echo = c.echo();
  switch (c.command) {
    case Command::Embed: {
      const VectorDataset ds = pad_to_power_of_two(read_vectors(c.in));
      JlParams p;
      p.d = c.d;
      p.k = c.k;
      p.eps = c.eps;
      p.q = c.q;
      p.seed = c.seed;
      const FastJlTransform map = FastJlTransform::sample(p);
      VectorDataset result;
      result.d = c.k;
      result.source = c.out;
      std::vector<double> scratch(c.d);
      for (const auto& x : ds.vectors) {
        std::vector<double> y(c.k);
        map.apply_into(x, scratch, y);
        result.vectors.push_back(std::move(y));
      }
      write_vectors(c.out, result);
      if (!c.report.empty()) {
        Json j;
        j["experiment"] = "embed";
        j["vectors"] = ds.vectors.size();
        j["nnz"] = map.projection().nnz();
        j["config"] = echo;
        detail::emit(c.report, j.dump() + "\n", out);
      }
      return 0;
    }
    case Command::Bench: {
      std::vector<BenchConfig> configs = {{BenchMethod::Dense, c.d, c.k, 1.0}};
      if (c.reference_q) configs.push_back({BenchMethod::FastJL_AC, c.d, c.k, *c.reference_q});
      configs.push_back({BenchMethod::FastJL_New, c.d, c.k, c.q});
      BenchOptions opt;
      opt.reps = c.reps;
      opt.seed = c.seed;
      opt.workers = c.workers;
      const std::string csv = bench_csv(run_bench(configs, opt));
      if (c.report.empty()) {
        out << csv;
      } else {
        write_file_atomically(c.report, csv);
        write_file_atomically(c.report + ".config", echo_to_config_text(echo));
      }
      return 0;
    }
    default: {
      const auto records = detail::run_records(c);
      detail::emit(c.report, to_json_lines(records, echo), out);
      return any_failed(records) ? 1 : 0;
    }
  }
}

/// Entry point shared by the executable and tests: 0 / 1 as execute, 2 on
/// usage or runtime errors (message on `err`).
inline int run_main(const std::vector<std::string>& argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  try {
    return execute(parse_config(argv), out);
  } catch (const HelpRequested& h) {
    out << h.text;
    return 0;
  } catch (const std::exception& e) {
    err << "fastjl: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace fastjl
