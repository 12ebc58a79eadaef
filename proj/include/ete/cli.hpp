#pragma once

// Command-line front end: simulate, analyze, scan-delay, bench, validate.
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ete/bench.hpp"
#include "ete/embedding.hpp"
#include "ete/inference.hpp"
#include "ete/io.hpp"
#include "ete/simulators.hpp"

namespace ete::cli {

inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kData = 2;

// Bad flag values detected after CLI11 parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline long long parse_int(const std::string& text, const std::string& flag) {
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw UsageError(flag + ": '" + text + "' is not an integer");
  }
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, sep);) out.push_back(part);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

// "T-:T+", both 1-based and inclusive.
inline Window parse_window(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 2) throw UsageError("--window: expected T-:T+, got '" + text + "'");
  const Sample first = parse_int(parts[0], "--window");
  const Sample last = parse_int(parts[1], "--window");
  if (first < 1) throw UsageError("--window: T- must be >= 1, got " + parts[0]);
  if (first > last) {
    throw UsageError("--window: T- must not exceed T+ (got " + parts[0] + " > " + parts[1] + ")");
  }
  return {first, last};
}

// "A", "A:B" or "A:B:STEP" (inclusive, positive).
inline std::vector<std::size_t> parse_range(const std::string& text, const std::string& flag) {
  const auto parts = split(text, ':');
  if (parts.empty() || parts.size() > 3) throw UsageError(flag + ": expected A, A:B or A:B:STEP, got '" + text + "'");
  const long long a = parse_int(parts[0], flag);
  const long long b = parts.size() > 1 ? parse_int(parts[1], flag) : a;
  const long long step = parts.size() > 2 ? parse_int(parts[2], flag) : 1;
  if (a < 1) throw UsageError(flag + ": values must be >= 1");
  if (step < 1) throw UsageError(flag + ": STEP must be >= 1");
  if (a > b) throw UsageError(flag + ": start must not exceed end (got " + parts[0] + " > " + parts[1] + ")");
  std::vector<std::size_t> out;
  for (long long v = a; v <= b; v += step) out.push_back(static_cast<std::size_t>(v));
  return out;
}

inline std::vector<std::size_t> parse_list(const std::string& text, const std::string& flag) {
  std::vector<std::size_t> out;
  for (const auto& p : split(text, ',')) {
    const long long v = parse_int(p, flag);
    if (v < 1) throw UsageError(flag + ": values must be >= 1");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

inline Parallelism parse_threads(const std::string& text) {
  if (text == "max") return Parallelism{std::max(1u, std::thread::hardware_concurrency())};
  const long long v = parse_int(text, "--threads");
  if (v < 1) throw UsageError("--threads: must be >= 1 or 'max'");
  return Parallelism{static_cast<std::size_t>(v)};
}

inline FileFormat parse_format(const std::string& text) {
  if (text == "csv") return FileFormat::csv;
  if (text == "bin") return FileFormat::bin;
  throw UsageError("--format: expected csv or bin, got '" + text + "'");
}

inline Correction parse_correction_flag(const std::string& text) {
  try {
    return parse_correction(text);
  } catch (const Error&) {
    throw UsageError("--correction: expected none, bonferroni or fdr, got '" + text + "'");
  }
}

inline void write_pair(const EnsembleSeries& x, const EnsembleSeries& y, const std::string& dir, FileFormat fmt,
                       std::ostream& out) {
  std::filesystem::create_directories(dir);
  const std::string ext = fmt == FileFormat::bin ? ".bin" : ".csv";
  for (const auto* s : {&x, &y}) {
    const auto path = std::filesystem::path(dir) / (s->name() + ext);
    save_ensemble(*s, path, fmt);
    out << "wrote " << path.string() << " (" << s->n_repetitions() << " x " << s->n_samples() << ")\n";
  }
}

// Options shared by analyze and scan-delay.
struct AnalyzeOptions {
  std::string source, target;
  std::size_t k = 4;
  std::size_t surrogates = 500;
  double alpha = 0.05;
  std::vector<std::string> windows;
  std::string u = "1";
  std::size_t dim = 1;
  std::size_t tau = 1;
  bool ragwitz = false;
  std::string ragwitz_dims = "1:5";
  std::string ragwitz_taus = "1:3";
  std::size_t ragwitz_k = 4;
  std::size_t ragwitz_budget = 2000;
  std::uint64_t seed = 0;
  std::string threads = "max";
  std::string correction = "bonferroni";
  bool both_directions = false;
  bool plus_one = false;
  bool allow_fixed_points = false;
  double jitter = 1e-8;
  std::string out;
  std::string curve_out;
};

inline void add_analyze_options(CLI::App* cmd, AnalyzeOptions& o) {
  cmd->add_option("--source", o.source, "Source channel file (.csv or .bin)")->required();
  cmd->add_option("--target", o.target, "Target channel file (.csv or .bin)")->required();
  cmd->add_option("--k", o.k, "Neighbors in the joint space")->capture_default_str();
  cmd->add_option("--surrogates", o.surrogates, "Number of surrogate data sets")->capture_default_str();
  cmd->add_option("--alpha", o.alpha, "Significance level")->capture_default_str();
  cmd->add_option("--window", o.windows, "Analysis window T-:T+ in samples (repeatable)")->required();
  cmd->add_option("--u", o.u, "Candidate delays U1:U2:STEP in samples")->capture_default_str();
  cmd->add_option("--dim", o.dim, "Embedding dimension (both channels)")->capture_default_str();
  cmd->add_option("--tau", o.tau, "Embedding delay in samples (both channels)")->capture_default_str();
  cmd->add_flag("--ragwitz", o.ragwitz, "Select dim/tau per channel by Ragwitz prediction error");
  cmd->add_option("--ragwitz-dims", o.ragwitz_dims, "Candidate dims A:B")->capture_default_str();
  cmd->add_option("--ragwitz-taus", o.ragwitz_taus, "Candidate taus A:B")->capture_default_str();
  cmd->add_option("--ragwitz-k", o.ragwitz_k, "Neighbors of the local predictor")->capture_default_str();
  cmd->add_option("--ragwitz-budget", o.ragwitz_budget, "Anchor sample budget")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  cmd->add_option("--threads", o.threads, "Worker threads (number or 'max')")->capture_default_str();
  cmd->add_option("--correction", o.correction, "none, bonferroni or fdr")->capture_default_str();
  cmd->add_flag("--both-directions", o.both_directions, "Also test target -> source");
  cmd->add_flag("--plus-one", o.plus_one, "p = (count + 1) / (S + 1)");
  cmd->add_flag("--allow-fixed-points", o.allow_fixed_points, "Surrogate permutations may keep repetitions");
  cmd->add_option("--jitter", o.jitter, "Jitter amplitude relative to column std")->capture_default_str();
}

struct PreparedAnalysis {
  EnsembleSeries source;
  EnsembleSeries target;
  std::vector<Window> windows;
  AnalysisConfig config;
  RunOptions run;
};

inline PreparedAnalysis prepare(const AnalyzeOptions& o) {
  AnalysisConfig cfg;
  cfg.k = o.k;
  cfg.n_surrogates = o.surrogates;
  cfg.alpha = o.alpha;
  cfg.u_candidates = parse_range(o.u, "--u");
  cfg.seed = o.seed;
  cfg.correction = parse_correction_flag(o.correction);
  cfg.pvalue_mode = o.plus_one ? PValueMode::plus_one : PValueMode::proportion;
  cfg.strict_permutation = !o.allow_fixed_points;
  cfg.jitter_amplitude = o.jitter;
  if (o.k < 1) throw UsageError("--k: must be >= 1");
  if (o.surrogates < 1) throw UsageError("--surrogates: must be >= 1");
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw UsageError("--alpha: must lie in (0, 1)");
  if (o.dim < 1 || o.tau < 1) throw UsageError("--dim/--tau: must be >= 1");
  if (!(o.jitter >= 0.0)) throw UsageError("--jitter: must be >= 0");
  std::vector<Window> windows;
  for (const auto& w : o.windows) windows.push_back(parse_window(w));
  PreparedAnalysis p{load_ensemble(o.source), load_ensemble(o.target), windows, cfg, RunOptions{}};
  p.run.parallelism = parse_threads(o.threads);
  if (p.source.name() == p.target.name()) p.target.set_name(p.target.name() + "'");
  return p;
}

inline EmbeddingSpec choose_embedding(const EnsembleSeries& s, const AnalyzeOptions& o, const PreparedAnalysis& p,
                                      std::ostream& out) {
  if (!o.ragwitz) return EmbeddingSpec{o.dim, o.tau};
  const auto res = optimize_embedding(s, parse_range(o.ragwitz_dims, "--ragwitz-dims"),
                                      parse_range(o.ragwitz_taus, "--ragwitz-taus"), o.ragwitz_k, o.ragwitz_budget,
                                      p.config.seed, p.run.parallelism);
  out << "embedding " << s.name() << ": dim=" << res.best.dim << " tau=" << res.best.delay << '\n';
  return res.best;
}

inline std::vector<TEResult> run_analysis(const AnalyzeOptions& o, PreparedAnalysis& p, std::ostream& out) {
  const EmbeddingSpec ex = choose_embedding(p.source, o, p, out);
  const EmbeddingSpec ey = choose_embedding(p.target, o, p, out);
  std::vector<TEResult> results;
  for (const Window& w : p.windows) {
    AnalysisConfig cfg = p.config;
    cfg.window = w;
    results.push_back(analyze_pair(p.source, p.target, ex, ey, cfg, p.run));
    if (o.both_directions) results.push_back(analyze_pair(p.target, p.source, ey, ex, cfg, p.run));
  }
  apply_correction(results, p.config.alpha, p.config.correction);
  for (const auto& r : results) {
    out << r.source << " -> " << r.target << " window " << r.window.first << ":" << r.window.last
        << " u*=" << r.u_selected << " te=" << format_double(r.te_value) << " p=" << format_double(r.p_value)
        << (r.significant_corrected ? " significant" : " n.s.") << '\n';
  }
  return results;
}

// Messages go to `log`, which is stderr when the curve CSV takes stdout.
inline int analyze_command(const AnalyzeOptions& o, std::ostream& out, std::ostream& err) {
  std::ostream& log = o.curve_out == "-" ? err : out;
  PreparedAnalysis p = prepare(o);
  const auto results = run_analysis(o, p, log);
  AnalysisConfig echo = p.config;
  echo.window = p.windows.front();
  if (!o.out.empty()) {
    write_results(results, echo, o.out);
    log << "wrote " << o.out << '\n';
  }
  if (!o.curve_out.empty()) {
    if (o.curve_out == "-") {
      write_curve_csv(out, results);
    } else {
      auto os = ete::detail::open_out(o.curve_out);
      write_curve_csv(os, results);
      log << "wrote " << o.curve_out << '\n';
    }
  }
  return kOk;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Ensemble transfer entropy: simulation, estimation and significance testing", "ete"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a test system and write X and Y ensembles");
  sim->require_subcommand(1);
  std::string sim_out = ".";
  std::string sim_format = "bin";
  std::size_t sim_reps = 0, sim_samples = 0;
  std::uint64_t sim_seed = 0;
  std::string sim_threads = "max";
  auto add_sim_common = [&](CLI::App* c) {
    c->add_option("--out", sim_out, "Output directory (files X.<ext>, Y.<ext>)")->capture_default_str();
    c->add_option("--format", sim_format, "csv or bin")->capture_default_str();
    c->add_option("--reps", sim_reps, "Repetitions");
    c->add_option("--samples", sim_samples, "Recorded samples per repetition");
    c->add_option("--seed", sim_seed, "Seed")->capture_default_str();
    c->add_option("--threads", sim_threads, "Worker threads (number or 'max')")->capture_default_str();
  };

  auto* lorenz = sim->add_subcommand("lorenz", "Delay-coupled Lorenz pair (X drives Y)");
  add_sim_common(lorenz);
  LorenzParams lp;
  double gamma = 0.3;
  std::string coupling = "1000:2000";
  lorenz->add_option("--delta", lp.delta_xy, "Coupling delay in samples")->capture_default_str();
  lorenz->add_option("--gamma", gamma, "Coupling strength")->capture_default_str();
  lorenz->add_option("--coupling", coupling, "Coupled samples T-:T+, or 'always'")->capture_default_str();
  lorenz->add_option("--dt", lp.integration_dt, "Integration step")->capture_default_str();
  lorenz->add_option("--steps-per-sample", lp.steps_per_sample, "Integration steps per recorded sample")
      ->capture_default_str();
  lorenz->add_option("--burn-in-steps", lp.burn_in_steps, "Discarded integration steps")->capture_default_str();

  auto* ar = sim->add_subcommand("ar", "AR(1) pair with tanh-modulated coupling");
  add_sim_common(ar);
  std::string scenario = "unidirectional";
  std::size_t ar_burn = 500;
  ar->add_option("--scenario", scenario, "unidirectional, two_step or bidirectional")->capture_default_str();
  ar->add_option("--burn-in", ar_burn, "Discarded samples")->capture_default_str();

  // analyze / scan-delay
  detail::AnalyzeOptions ao;
  auto* analyze = app.add_subcommand("analyze", "Test directed TE with repetition-shuffling surrogates");
  detail::add_analyze_options(analyze, ao);
  analyze->add_option("--out", ao.out, "Result JSON path");
  analyze->add_option("--curve-out", ao.curve_out, "Optional TE-curve CSV path ('-' for stdout)");

  detail::AnalyzeOptions so;
  so.surrogates = 100;
  auto* scan = app.add_subcommand("scan-delay", "Scan candidate delays and emit the TE curve as CSV");
  detail::add_analyze_options(scan, so);
  scan->add_option("--out", so.curve_out, "Curve CSV path ('-' for stdout)")->capture_default_str();
  scan->add_option("--json", so.out, "Optional result JSON path");
  so.curve_out = "-";

  // bench
  auto* bench = app.add_subcommand("bench", "Time batched neighbor searches over duplicated chunks");
  BenchConfig bc;
  std::string chunks = "1,2,4,8,16,32,64";
  std::string bench_threads = "max";
  std::string bench_method = "brute";
  std::string bench_out;
  bench->add_option("--points", bc.chunk_points, "Points per chunk")->capture_default_str();
  bench->add_option("--joint-dim", bc.joint_dim, "Joint-space dimension")->capture_default_str();
  bench->add_option("--marginal-dim", bc.marginal_dim, "Range-search dimension")->capture_default_str();
  bench->add_option("--k", bc.k, "Neighbors")->capture_default_str();
  bench->add_option("--chunks", chunks, "Ascending chunk counts, comma separated")->capture_default_str();
  bench->add_option("--repeats", bc.repeats, "Timed repeats per row")->capture_default_str();
  bench->add_option("--seed", bc.seed, "Seed")->capture_default_str();
  bench->add_option("--threads", bench_threads, "Worker threads (number or 'max')")->capture_default_str();
  bench->add_option("--method", bench_method, "brute or tree")->capture_default_str();
  bench->add_option("--out", bench_out, "CSV report path");

  // validate
  auto* validate = app.add_subcommand("validate", "Check ensemble files");
  std::vector<std::string> inputs;
  validate->add_option("inputs", inputs, "Files to check")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* cmd = &app;
    for (auto sub = app.get_subcommands(); !sub.empty(); sub = cmd->get_subcommands()) cmd = sub.front();
    err << cmd->help();
    return kUsage;
  }

  try {
    if (*lorenz) {
      lp.n_repetitions = sim_reps ? sim_reps : 50;
      lp.n_samples = sim_samples ? sim_samples : 3000;
      lp.seed = sim_seed;
      if (coupling == "always") {
        lp.gamma_xy = constant_coupling(gamma);
      } else {
        const Window w = detail::parse_window(coupling);
        lp.gamma_xy = boxcar_coupling(gamma, w.first, w.last);
      }
      const auto fmt = detail::parse_format(sim_format);
      const auto [x, y] = simulate_lorenz_pair(lp, detail::parse_threads(sim_threads));
      detail::write_pair(x, y, sim_out, fmt, out);
    } else if (*ar) {
      ARScenario s;
      if (scenario == "unidirectional") {
        s = ARScenario::unidirectional;
      } else if (scenario == "two_step") {
        s = ARScenario::two_step;
      } else if (scenario == "bidirectional") {
        s = ARScenario::bidirectional;
      } else {
        throw UsageError("--scenario: expected unidirectional, two_step or bidirectional, got '" + scenario + "'");
      }
      ARParams p = ARParams::scenario_defaults(s);
      p.n_repetitions = sim_reps ? sim_reps : 50;
      p.n_samples = sim_samples ? sim_samples : 3000;
      p.seed = sim_seed;
      p.burn_in = ar_burn;
      const auto fmt = detail::parse_format(sim_format);
      const auto [x, y] = simulate_ar_pair(p, detail::parse_threads(sim_threads));
      detail::write_pair(x, y, sim_out, fmt, out);
    } else if (*analyze) {
      return detail::analyze_command(ao, out, err);
    } else if (*scan) {
      return detail::analyze_command(so, out, err);
    } else if (*bench) {
      bc.n_chunks_list = detail::parse_list(chunks, "--chunks");
      if (!std::is_sorted(bc.n_chunks_list.begin(), bc.n_chunks_list.end(), std::less_equal<>{})) {
        throw UsageError("--chunks: counts must be strictly ascending");
      }
      bc.parallelism = detail::parse_threads(bench_threads);
      if (bench_method == "brute") {
        bc.method = SearchMethod::brute_force;
      } else if (bench_method == "tree") {
        bc.method = SearchMethod::kd_tree;
      } else {
        throw UsageError("--method: expected brute or tree, got '" + bench_method + "'");
      }
      out << "hardware: " << hardware_description() << '\n';
      const auto report = run_bench(bc, &out);
      out << "reference (original CPU, per chunk): kNN " << PublishedReference::cpu_knn_seconds << " s, range search "
          << PublishedReference::cpu_range_seconds << " s; GPU factors 22x/33x/50x (context only)\n";
      if (bench_out.empty()) {
        write_bench_csv(out, report);
      } else {
        auto os = ete::detail::open_out(bench_out);
        write_bench_csv(os, report);
        out << "wrote " << bench_out << '\n';
      }
    } else if (*validate) {
      int status = kOk;
      for (const auto& path : inputs) {
        try {
          const auto s = load_ensemble(path);
          out << path << ": ok, name=" << s.name() << " repetitions=" << s.n_repetitions()
              << " samples=" << s.n_samples() << '\n';
        } catch (const Error& e) {
          err << path << ": " << e.what() << '\n';
          status = kData;
        }
      }
      return status;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}

}  // namespace ete::cli
