#pragma once

// Kraskov-Stoegbauer-Grassberger (type 1) estimate of transfer entropy from a
// pooled ensemble state space. Output unit: nats.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ete/digamma.hpp"
#include "ete/embedding.hpp"
#include "ete/error.hpp"
#include "ete/neighbor_engine.hpp"
#include "ete/parallel.hpp"
#include "ete/rng.hpp"

namespace ete {

struct TermCounts {
  std::size_t k = 4;
  std::vector<std::size_t> n_ypast;
  std::vector<std::size_t> n_y_ypast;
  std::vector<std::size_t> n_ypast_xpast;
};

// psi(k) + < psi(n_ypast + 1) - psi(n_y_ypast + 1) - psi(n_ypast_xpast + 1) >
inline double te_from_counts(const TermCounts& counts) {
  const std::size_t m = counts.n_ypast.size();
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "no points to average over");
  if (counts.n_y_ypast.size() != m || counts.n_ypast_xpast.size() != m) {
    throw Error(ErrorCode::ShapeMismatch, "count vectors differ in length");
  }
  const DigammaTable psi(m + 1);
  // Each term is summed through a histogram of count values, so the result
  // does not depend on the order of the pooled points.
  auto term = [&](const std::vector<std::size_t>& n) {
    std::vector<std::size_t> hist;
    for (std::size_t v : n) {
      if (v >= hist.size()) hist.resize(v + 1, 0);
      ++hist[v];
    }
    double s = 0.0;
    for (std::size_t v = 0; v < hist.size(); ++v) {
      if (hist[v] > 0) s += static_cast<double>(hist[v]) * psi(v + 1);
    }
    return s;
  };
  const double sum = term(counts.n_ypast) - term(counts.n_y_ypast) - term(counts.n_ypast_xpast);
  return psi(counts.k) + sum / static_cast<double>(m);
}

struct EstimatorOptions {
  std::size_t k = 4;
  double jitter_amplitude = 1e-8;
  SearchMethod method = SearchMethod::automatic;
};

namespace detail {

// Adds uniform noise of half-width amplitude * column std to every joint
// coordinate. Marginals must be refreshed afterwards.
inline void apply_jitter(PointSet<double>& joint, double amplitude, std::uint64_t seed) {
  if (!(amplitude > 0.0)) return;
  const std::size_t n = joint.rows();
  const std::size_t dims = joint.dims();
  std::vector<double> half_width(dims, 0.0);
  for (std::size_t c = 0; c < dims; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += joint(i, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (joint(i, c) - mean) * (joint(i, c) - mean);
    half_width[c] = amplitude * std::sqrt(var / static_cast<double>(n));
  }
  Rng rng = make_rng(seed, {stream::jitter});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < dims; ++c) joint(i, c) += half_width[c] * (2.0 * uniform01(rng) - 1.0);
  }
}

inline bool all_rows_identical(const PointSet<double>& pts) {
  for (std::size_t i = 1; i < pts.rows(); ++i) {
    if (!std::equal(pts.row(i).begin(), pts.row(i).end(), pts.row(0).begin())) return false;
  }
  return true;
}

inline SearchProblem<double> to_problem(PointSetBundle bundle, double jitter_amplitude, std::uint64_t seed,
                                        std::int64_t chunk_id) {
  if (bundle.size() > 0 && all_rows_identical(bundle.joint)) {
    throw Error(ErrorCode::DegenerateData, "all pooled points are identical");
  }
  if (jitter_amplitude > 0.0) {
    apply_jitter(bundle.joint, jitter_amplitude, seed);
    bundle.refresh_marginals();
  }
  SearchProblem<double> p;
  p.joint = Chunk<double>{std::move(bundle.joint), chunk_id};
  p.marginals.push_back(std::move(bundle.marg_ypast));
  p.marginals.push_back(std::move(bundle.marg_y_ypast));
  p.marginals.push_back(std::move(bundle.marg_ypast_xpast));
  return p;
}

inline double te_from_stats(const SearchStats<double>& stats, std::size_t k) {
  TermCounts counts;
  counts.k = k;
  counts.n_ypast = stats.marginal_counts[0];
  counts.n_y_ypast = stats.marginal_counts[1];
  counts.n_ypast_xpast = stats.marginal_counts[2];
  return te_from_counts(counts);
}

inline void check_size(const PointSetBundle& bundle, std::size_t k) {
  if (bundle.size() <= k) {
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " needs more than k pooled points, got " +
                                          std::to_string(bundle.size()));
  }
}

}  // namespace detail

// Estimates TE for several bundles through one batched neighbor search.
// seeds[i] drives the jitter of bundles[i]. Any failing bundle raises its error.
inline std::vector<double> estimate_te_batch(std::vector<PointSetBundle> bundles, std::span<const std::uint64_t> seeds,
                                             const EstimatorOptions& options, Parallelism parallelism = Parallelism{}) {
  if (seeds.size() != bundles.size()) throw Error(ErrorCode::ShapeMismatch, "one seed per bundle required");
  std::vector<SearchProblem<double>> problems;
  problems.reserve(bundles.size());
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    detail::check_size(bundles[i], options.k);
    problems.push_back(
        detail::to_problem(std::move(bundles[i]), options.jitter_amplitude, seeds[i], static_cast<std::int64_t>(i)));
  }
  const auto outcomes = batch_search(std::span<const SearchProblem<double>>(problems), options.k, parallelism,
                                     options.method);
  std::vector<double> te(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) te[i] = detail::te_from_stats(outcomes[i].value(), options.k);
  return te;
}

inline double estimate_te(const PointSetBundle& bundle, std::size_t k, double jitter_amplitude, std::uint64_t seed,
                          Parallelism parallelism = Parallelism{}, SearchMethod method = SearchMethod::automatic) {
  const std::uint64_t seeds[] = {seed};
  std::vector<PointSetBundle> one{bundle};
  return estimate_te_batch(std::move(one), seeds, EstimatorOptions{k, jitter_amplitude, method}, parallelism).front();
}

}  // namespace ete
