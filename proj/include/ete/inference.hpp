#pragma once

// Repetition-shuffling surrogates, permutation tests, multiple-comparison
// correction and the per-pair analysis pipeline.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ete/embedding.hpp"
#include "ete/ensemble.hpp"
#include "ete/error.hpp"
#include "ete/ksg.hpp"
#include "ete/parallel.hpp"
#include "ete/rng.hpp"

namespace ete {

// Row r of a surrogate target is row permutation[r] of the original.
struct SurrogateSpec {
  std::vector<std::size_t> permutation;
  std::uint64_t seed = 0;
};

inline void check_permutation(const SurrogateSpec& spec, std::size_t reps, bool strict) {
  if (spec.permutation.size() != reps) {
    throw Error(ErrorCode::InvalidPermutation, "permutation has " + std::to_string(spec.permutation.size()) +
                                                   " entries for " + std::to_string(reps) + " repetitions");
  }
  std::vector<bool> seen(reps, false);
  for (std::size_t r = 0; r < reps; ++r) {
    const std::size_t p = spec.permutation[r];
    if (p >= reps || seen[p]) throw Error(ErrorCode::InvalidPermutation, "permutation is not a bijection");
    seen[p] = true;
    if (strict && p == r) {
      throw Error(ErrorCode::InvalidPermutation, "repetition " + std::to_string(r) + " is a fixed point");
    }
  }
}

inline SurrogateSpec identity_surrogate(std::size_t reps) {
  SurrogateSpec s;
  s.permutation.resize(reps);
  std::iota(s.permutation.begin(), s.permutation.end(), std::size_t{0});
  return s;
}

// Uniform random permutation (uniform derangement when strict) drawn from
// the stream of (master_seed, index).
inline SurrogateSpec make_surrogate(std::size_t reps, std::uint64_t master_seed, std::size_t index, bool strict) {
  if (reps < 2 && strict) {
    throw Error(ErrorCode::InvalidPermutation, "a permutation without fixed points needs at least 2 repetitions");
  }
  SurrogateSpec s = identity_surrogate(reps);
  s.seed = derive_seed(master_seed, {stream::surrogate, index});
  Rng rng(s.seed);
  for (;;) {
    std::iota(s.permutation.begin(), s.permutation.end(), std::size_t{0});
    for (std::size_t i = reps; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(s.permutation[i - 1], s.permutation[j]);
    }
    if (!strict) break;
    bool fixed = false;
    for (std::size_t r = 0; r < reps && !fixed; ++r) fixed = s.permutation[r] == r;
    if (!fixed) break;
  }
  return s;
}

inline EnsembleSeries shuffle_target(const EnsembleSeries& target, const SurrogateSpec& spec) {
  check_permutation(spec, target.n_repetitions(), false);
  const std::size_t n = target.n_samples();
  std::vector<double> v;
  v.reserve(target.values().size());
  for (std::size_t r : spec.permutation) v.insert(v.end(), target.row(r).begin(), target.row(r).end());
  return EnsembleSeries(target.name(), target.n_repetitions(), n, std::move(v), target.sample_rate());
}

inline double permutation_pvalue(double te_original, std::span<const double> te_surrogates,
                                 PValueMode mode = PValueMode::proportion) {
  if (te_surrogates.empty()) throw Error(ErrorCode::InvalidArgument, "no surrogate values");
  const auto count = static_cast<double>(
      std::count_if(te_surrogates.begin(), te_surrogates.end(), [&](double s) { return s >= te_original; }));
  const auto s = static_cast<double>(te_surrogates.size());
  return mode == PValueMode::plus_one ? (count + 1.0) / (s + 1.0) : count / s;
}

inline Correction parse_correction(const std::string& name) {
  if (name == "none") return Correction::none;
  if (name == "bonferroni") return Correction::bonferroni;
  if (name == "fdr") return Correction::fdr;
  throw Error(ErrorCode::UnknownMethod, "unknown correction method '" + name + "'");
}

inline std::string to_string(Correction c) {
  switch (c) {
    case Correction::none: return "none";
    case Correction::bonferroni: return "bonferroni";
    case Correction::fdr: return "fdr";
  }
  return "?";
}

inline std::vector<bool> correct_multiple(std::span<const double> pvalues, double alpha, Correction method) {
  const std::size_t m = pvalues.size();
  for (double p : pvalues) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "p-values must lie in [0, 1]");
  }
  std::vector<bool> sig(m, false);
  switch (method) {
    case Correction::none:
      for (std::size_t i = 0; i < m; ++i) sig[i] = pvalues[i] < alpha;
      break;
    case Correction::bonferroni:
      for (std::size_t i = 0; i < m; ++i) sig[i] = pvalues[i] < alpha / static_cast<double>(m);
      break;
    case Correction::fdr: {
      // Benjamini-Hochberg step-up.
      std::vector<std::size_t> order(m);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
      std::size_t cutoff = 0;
      for (std::size_t i = 0; i < m; ++i) {
        if (pvalues[order[i]] <= static_cast<double>(i + 1) / static_cast<double>(m) * alpha) cutoff = i + 1;
      }
      for (std::size_t i = 0; i < cutoff; ++i) sig[order[i]] = true;
      break;
    }
    default:
      throw Error(ErrorCode::UnknownMethod, "unknown correction method");
  }
  return sig;
}

// Fills significant_corrected across a family of results.
inline void apply_correction(std::vector<TEResult>& results, double alpha, Correction method) {
  std::vector<double> p;
  p.reserve(results.size());
  for (const auto& r : results) p.push_back(r.p_value);
  const auto sig = correct_multiple(p, alpha, method);
  for (std::size_t i = 0; i < results.size(); ++i) results[i].significant_corrected = sig[i];
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorCode::InvalidArgument, "median of an empty list");
  const std::size_t h = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h), v.end());
  const double hi = v[h];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h));
  return lo + (hi - lo) / 2.0;
}

// u* = argmax of the curve; the smallest u wins ties.
inline std::size_t select_delay(const std::vector<std::pair<std::size_t, double>>& curve) {
  if (curve.empty()) throw Error(ErrorCode::InvalidArgument, "empty TE curve");
  auto best = curve.front();
  for (const auto& p : curve) {
    if (p.second > best.second || (p.second == best.second && p.first < best.first)) best = p;
  }
  return best.first;
}

// Execution knobs. None of them changes results.
struct RunOptions {
  Parallelism parallelism{};
  std::size_t batch_size = 64;  // bundles per engine submission
  SearchMethod method = SearchMethod::automatic;
};

namespace detail {

// Jitter seed of the bundle for delay u; index 0 is the original data,
// index s + 1 the s-th surrogate.
inline std::uint64_t bundle_seed(std::uint64_t master, std::size_t u, std::size_t index) {
  return derive_seed(master, {stream::jitter, u, index});
}

template <class MakeBundle>
std::vector<double> estimate_in_batches(std::size_t count, MakeBundle&& make, const AnalysisConfig& config,
                                        const RunOptions& run) {
  const std::size_t batch = std::max<std::size_t>(1, run.batch_size);
  const EstimatorOptions est{config.k, config.jitter_amplitude, run.method};
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t first = 0; first < count; first += batch) {
    const std::size_t last = std::min(count, first + batch);
    std::vector<PointSetBundle> bundles(last - first);
    std::vector<std::uint64_t> seeds(last - first);
    parallel_for(last - first, run.parallelism, [&](std::size_t i) {
      auto [b, s] = make(first + i);
      bundles[i] = std::move(b);
      seeds[i] = s;
    });
    const auto te = estimate_te_batch(std::move(bundles), seeds, est, run.parallelism);
    out.insert(out.end(), te.begin(), te.end());
  }
  return out;
}

}  // namespace detail

// Full pipeline for one directed pair and window: TE on original data for
// every candidate delay, u* = argmax (smallest u on ties), then S surrogate
// estimates at u* and the permutation p-value.
inline TEResult analyze_pair(const EnsembleSeries& source, const EnsembleSeries& target,
                             const EmbeddingSpec& spec_x, const EmbeddingSpec& spec_y, const AnalysisConfig& config,
                             const RunOptions& run = RunOptions{}) {
  check_config(config);
  check_embedding_spec(spec_x, source.n_samples());
  check_embedding_spec(spec_y, target.n_samples());
  if (source.n_repetitions() != target.n_repetitions() || source.n_samples() != target.n_samples()) {
    throw Error(ErrorCode::ShapeMismatch, "source " + source.name() + " and target " + target.name() +
                                              " differ in shape");
  }
  const auto& us = config.u_candidates;
  const auto curve = detail::estimate_in_batches(
      us.size(),
      [&](std::size_t i) {
        return std::pair{assemble_pointsets(source, target, spec_x, spec_y, us[i], config.window),
                         detail::bundle_seed(config.seed, us[i], 0)};
      },
      config, run);

  TEResult res;
  res.source = source.name();
  res.target = target.name();
  res.window = config.window;
  res.source_embedding = spec_x;
  res.target_embedding = spec_y;
  std::size_t best = 0;
  for (std::size_t i = 0; i < us.size(); ++i) res.te_curve.emplace_back(us[i], curve[i]);
  res.u_selected = select_delay(res.te_curve);
  while (us[best] != res.u_selected) ++best;
  res.te_value = curve[best];

  const std::size_t u = res.u_selected;
  const std::size_t reps = target.n_repetitions();
  try {
    res.surrogate_values = detail::estimate_in_batches(
        config.n_surrogates,
        [&](std::size_t s) {
          const auto spec = make_surrogate(reps, config.seed, s, config.strict_permutation);
          return std::pair{assemble_pointsets(source, shuffle_target(target, spec), spec_x, spec_y, u, config.window),
                           detail::bundle_seed(config.seed, u, s + 1)};
        },
        config, run);
  } catch (const Error& e) {
    throw Error(e.code(), "surrogate estimation failed for " + res.source + " -> " + res.target + ": " +
                              e.message());
  }
  res.p_value = permutation_pvalue(res.te_value, res.surrogate_values, config.pvalue_mode);
  res.significant = res.p_value < config.alpha;
  res.significant_corrected = res.significant;
  res.te_minus_median_surrogate = res.te_value - median(res.surrogate_values);
  return res;
}

// Delay reconstruction: analyze_pair over a range of candidate delays.
inline TEResult scan_delays(const EnsembleSeries& source, const EnsembleSeries& target, const EmbeddingSpec& spec_x,
                            const EmbeddingSpec& spec_y, const AnalysisConfig& config,
                            const RunOptions& run = RunOptions{}) {
  return analyze_pair(source, target, spec_x, spec_y, config, run);
}

}  // namespace ete
