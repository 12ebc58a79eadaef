#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ete/ensemble.hpp"
#include "ete/error.hpp"
#include "ete/neighbor_engine.hpp"
#include "ete/parallel.hpp"
#include "ete/point_set.hpp"
#include "ete/rng.hpp"

namespace ete {

// Delay vector (v_t, v_{t-tau}, ..., v_{t-(d-1)tau}) of repetition r, most
// recent sample first. t is 1-based.
inline std::vector<double> embed_past_state(const EnsembleSeries& series, const EmbeddingSpec& spec,
                                            std::size_t r, Sample t) {
  const Sample oldest = t - static_cast<Sample>((spec.dim - 1) * spec.delay);
  if (oldest < 1) {
    throw Error(ErrorCode::IndexUnderflow, "embedding at t=" + std::to_string(t) + " reaches back to sample " +
                                               std::to_string(oldest));
  }
  if (t > static_cast<Sample>(series.n_samples()) || r >= series.n_repetitions()) {
    throw Error(ErrorCode::InvalidArgument, "embedding anchor (r=" + std::to_string(r) + ", t=" +
                                                std::to_string(t) + ") outside the series");
  }
  std::vector<double> out(spec.dim);
  for (std::size_t j = 0; j < spec.dim; ++j) out[j] = series.at(r, t - static_cast<Sample>(j * spec.delay));
  return out;
}

// Pooled state-space points for one (window, u) analysis. Joint columns are
// [y_t | y_{t-1} past (d_Y) | x_{t-u} past (d_X)]; the three marginals are
// projections of these columns.
struct PointSetBundle {
  PointSet<double> joint;
  PointSet<double> marg_ypast;        // y past
  PointSet<double> marg_y_ypast;      // y_t, y past
  PointSet<double> marg_ypast_xpast;  // y past, x past
  std::vector<std::pair<std::size_t, Sample>> row_origin;  // (r, t')
  std::size_t target_dim = 1;
  std::size_t source_dim = 1;

  std::size_t size() const noexcept { return joint.rows(); }

  // Column indices of each marginal within the joint space.
  static std::vector<std::size_t> ypast_columns(std::size_t dy, std::size_t) {
    std::vector<std::size_t> c(dy);
    std::iota(c.begin(), c.end(), std::size_t{1});
    return c;
  }
  static std::vector<std::size_t> y_ypast_columns(std::size_t dy, std::size_t) {
    std::vector<std::size_t> c(dy + 1);
    std::iota(c.begin(), c.end(), std::size_t{0});
    return c;
  }
  static std::vector<std::size_t> ypast_xpast_columns(std::size_t dy, std::size_t dx) {
    std::vector<std::size_t> c(dy + dx);
    std::iota(c.begin(), c.end(), std::size_t{1});
    return c;
  }

  // Rebuilds the marginals from the (possibly modified) joint space.
  void refresh_marginals() {
    marg_ypast = joint.project(ypast_columns(target_dim, source_dim));
    marg_y_ypast = joint.project(y_ypast_columns(target_dim, source_dim));
    marg_ypast_xpast = joint.project(ypast_xpast_columns(target_dim, source_dim));
  }
};

inline PointSetBundle assemble_pointsets(const EnsembleSeries& source, const EnsembleSeries& target,
                                         const EmbeddingSpec& spec_x, const EmbeddingSpec& spec_y, std::size_t u,
                                         Window window) {
  if (source.n_repetitions() != target.n_repetitions() || source.n_samples() != target.n_samples()) {
    throw Error(ErrorCode::ShapeMismatch, "source " + source.name() + " and target " + target.name() +
                                              " differ in shape");
  }
  if (window.first > window.last) throw Error(ErrorCode::InvalidArgument, "window start exceeds window end");
  if (spec_x.dim < 1 || spec_x.delay < 1 || spec_y.dim < 1 || spec_y.delay < 1) {
    throw Error(ErrorCode::InvalidArgument, "embedding dim and delay must be >= 1");
  }
  if (u < 1) throw Error(ErrorCode::InvalidArgument, "u must be >= 1");
  const Sample n = static_cast<Sample>(target.n_samples());
  if (window.last > n) {
    throw Error(ErrorCode::InvalidArgument,
                "window end " + std::to_string(window.last) + " beyond series length " + std::to_string(n));
  }
  // Earliest sample touched by each part of the embedding at t'.
  const Sample y_reach = 1 + static_cast<Sample>((spec_y.dim - 1) * spec_y.delay);
  const Sample x_reach = static_cast<Sample>(u + (spec_x.dim - 1) * spec_x.delay);
  for (Sample t = window.first; t <= window.last; ++t) {
    if (t - y_reach < 1 || t - x_reach < 1) {
      throw Error(ErrorCode::IndexUnderflow,
                  "t'=" + std::to_string(t) + ", u=" + std::to_string(u) + " is not embeddable (needs samples back to " +
                      std::to_string(std::min(t - y_reach, t - x_reach)) + ")");
    }
  }

  const std::size_t reps = target.n_repetitions();
  const std::size_t len = window.length();
  const std::size_t dy = spec_y.dim;
  const std::size_t dx = spec_x.dim;

  PointSetBundle b;
  b.target_dim = dy;
  b.source_dim = dx;
  b.joint = PointSet<double>(reps * len, 1 + dy + dx);
  b.row_origin.reserve(reps * len);
  std::size_t i = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    for (Sample t = window.first; t <= window.last; ++t, ++i) {
      auto row = b.joint.row(i);
      row[0] = target.at(r, t);
      for (std::size_t j = 0; j < dy; ++j) row[1 + j] = target.at(r, t - 1 - static_cast<Sample>(j * spec_y.delay));
      for (std::size_t j = 0; j < dx; ++j) {
        row[1 + dy + j] = source.at(r, t - static_cast<Sample>(u + j * spec_x.delay));
      }
      b.row_origin.emplace_back(r, t);
    }
  }
  b.refresh_marginals();
  return b;
}

struct RagwitzScore {
  EmbeddingSpec spec;
  double mse = 0.0;
  std::size_t anchors = 0;

  friend bool operator==(const RagwitzScore&, const RagwitzScore&) = default;
};

struct RagwitzResult {
  EmbeddingSpec best;
  std::vector<RagwitzScore> table;  // one row per candidate, ordered by (d, tau)
};

namespace detail {

inline bool ragwitz_better(const RagwitzScore& a, const RagwitzScore& b) {
  if (a.mse != b.mse) return a.mse < b.mse;
  const std::size_t pa = a.spec.dim * a.spec.delay;
  const std::size_t pb = b.spec.dim * b.spec.delay;
  if (pa != pb) return pa < pb;
  return a.spec.dim < b.spec.dim;
}

inline RagwitzScore ragwitz_score(const EnsembleSeries& series, EmbeddingSpec spec, std::size_t k_pred,
                                  std::size_t sample_budget, std::uint64_t seed) {
  const std::size_t n = series.n_samples();
  const std::size_t reps = series.n_repetitions();
  const std::size_t first_col = (spec.dim - 1) * spec.delay;  // 0-based column of the earliest anchor
  if (first_col + 1 >= n) return RagwitzScore{spec, std::numeric_limits<double>::infinity(), 0};
  const std::size_t per_rep = n - 1 - first_col;
  const std::size_t pool = per_rep * reps;

  std::vector<std::size_t> picked(pool);
  std::iota(picked.begin(), picked.end(), std::size_t{0});
  if (pool > sample_budget) {
    Rng rng = make_rng(seed, {stream::ragwitz, spec.dim, spec.delay});
    for (std::size_t i = 0; i < sample_budget; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (pool - i));
      std::swap(picked[i], picked[j]);
    }
    picked.resize(sample_budget);
    std::sort(picked.begin(), picked.end());
  }

  const std::size_t m = picked.size();
  PointSet<double> vecs(m, spec.dim);
  std::vector<double> next(m);
  std::vector<std::size_t> rep_of(m);
  for (std::size_t a = 0; a < m; ++a) {
    const std::size_t r = picked[a] / per_rep;
    const std::size_t col = first_col + picked[a] % per_rep;
    for (std::size_t j = 0; j < spec.dim; ++j) vecs(a, j) = series.value(r, col - j * spec.delay);
    next[a] = series.value(r, col + 1);
    rep_of[a] = r;
  }

  double total = 0.0;
  std::size_t used = 0;
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t a = 0; a < m; ++a) {
    cand.clear();
    for (std::size_t b = 0; b < m; ++b) {
      if (rep_of[b] == rep_of[a]) continue;
      cand.emplace_back(max_norm(vecs.row(a).data(), vecs.row(b).data(), spec.dim), b);
    }
    if (cand.size() < k_pred) continue;
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k_pred), cand.end());
    double pred = 0.0;
    for (std::size_t q = 0; q < k_pred; ++q) pred += next[cand[q].second];
    pred /= static_cast<double>(k_pred);
    const double err = pred - next[a];
    total += err * err;
    ++used;
  }
  if (used == 0) return RagwitzScore{spec, std::numeric_limits<double>::infinity(), 0};
  return RagwitzScore{spec, total / static_cast<double>(used), used};
}

}  // namespace detail

// Chooses (dim, delay) minimising the mean squared error of a local-constant
// predictor: each anchor's next sample is predicted by the mean next sample of
// its k_pred nearest delay vectors (max norm) taken from other repetitions.
// Ties are broken by the smaller dim*delay, then the smaller dim.
inline RagwitzResult optimize_embedding(const EnsembleSeries& series, const std::vector<std::size_t>& d_candidates,
                                        const std::vector<std::size_t>& tau_candidates, std::size_t k_pred,
                                        std::size_t sample_budget, std::uint64_t seed,
                                        Parallelism parallelism = Parallelism::sequential()) {
  if (d_candidates.empty() || tau_candidates.empty()) {
    throw Error(ErrorCode::InvalidArgument, "embedding candidate lists must be nonempty");
  }
  if (k_pred < 1 || sample_budget < k_pred + 1) {
    throw Error(ErrorCode::InvalidArgument, "sample budget must exceed k_pred >= 1");
  }
  std::vector<EmbeddingSpec> specs;
  for (std::size_t d : d_candidates) {
    for (std::size_t tau : tau_candidates) {
      if (d < 1 || tau < 1) throw Error(ErrorCode::InvalidArgument, "embedding dim and delay must be >= 1");
      specs.push_back(EmbeddingSpec{d, tau});
    }
  }
  std::sort(specs.begin(), specs.end(), [](const EmbeddingSpec& a, const EmbeddingSpec& b) {
    return a.dim != b.dim ? a.dim < b.dim : a.delay < b.delay;
  });
  specs.erase(std::unique(specs.begin(), specs.end()), specs.end());

  RagwitzResult result;
  result.table.resize(specs.size());
  parallel_for(specs.size(), parallelism, [&](std::size_t i) {
    result.table[i] = detail::ragwitz_score(series, specs[i], k_pred, sample_budget, seed);
  });

  const RagwitzScore* best = nullptr;
  for (const auto& row : result.table) {
    if (row.anchors == 0) continue;
    if (best == nullptr || detail::ragwitz_better(row, *best)) best = &row;
  }
  if (best == nullptr) {
    throw Error(ErrorCode::InsufficientData, series.name() + ": no candidate embedding has usable anchors");
  }
  result.best = best->spec;
  return result;
}

}  // namespace ete
