#pragma once

// Batched exact k-nearest-neighbor distances and fixed-radius neighbor counts
// under the maximum norm.
//
// Every search method returns bit-identical results: per-pair distances are
// always computed by max_norm() below, k-th distances are exact order
// statistics, and counts are integers. The kd-tree path only skips pairs that
// provably cannot change the result.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ete/error.hpp"
#include "ete/parallel.hpp"
#include "ete/point_set.hpp"

namespace ete {

template <typename T>
inline T max_norm(const T* a, const T* b, std::size_t dims) noexcept {
  T d = 0;
  for (std::size_t c = 0; c < dims; ++c) {
    const T diff = std::abs(a[c] - b[c]);
    d = diff > d ? diff : d;
  }
  return d;
}

enum class SearchMethod {
  brute_force,  // exhaustive O(n^2) scan per chunk
  kd_tree,      // exact pruned search over a bounding-box tree
  automatic,    // kd_tree for large chunks, brute_force otherwise
};

template <typename T>
struct Chunk {
  PointSet<T> points;
  std::int64_t chunk_id = 0;
};

template <typename T>
struct NeighborCounts {
  std::vector<T> kth_distance;
  std::vector<std::size_t> radius_counts;

  friend bool operator==(const NeighborCounts&, const NeighborCounts&) = default;
};

namespace detail {

inline void check_chunk_shape(std::size_t n, std::size_t dims) {
  if (n < 2) throw Error(ErrorCode::ShapeMismatch, "chunk needs at least 2 points, got " + std::to_string(n));
  if (dims < 1) throw Error(ErrorCode::ShapeMismatch, "chunk needs at least 1 dimension");
}

inline void check_k(std::size_t k, std::size_t n) {
  if (k < 1 || k > n - 1) {
    throw Error(ErrorCode::KTooLarge,
                "k=" + std::to_string(k) + " requires 1 <= k <= n-1 with n=" + std::to_string(n));
  }
}

// Keeps the k smallest values seen so far, sorted ascending.
template <typename T>
class SmallestK {
 public:
  explicit SmallestK(std::size_t k) : k_(k) { values_.reserve(k); }

  T bound() const noexcept {
    return values_.size() < k_ ? std::numeric_limits<T>::infinity() : values_.back();
  }

  void offer(T d) {
    if (values_.size() < k_) {
      values_.insert(std::upper_bound(values_.begin(), values_.end(), d), d);
    } else if (d < values_.back()) {
      values_.pop_back();
      values_.insert(std::upper_bound(values_.begin(), values_.end(), d), d);
    }
  }

  T kth() const noexcept { return values_.back(); }

 private:
  std::size_t k_;
  std::vector<T> values_;
};

template <typename T>
T brute_kth(const PointSet<T>& pts, std::size_t i, std::size_t k) {
  const std::size_t n = pts.rows();
  const std::size_t dims = pts.dims();
  const T* base = pts.data();
  const T* query = base + i * dims;
  if (k <= 32) {
    SmallestK<T> best(k);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const T d = max_norm(query, base + j * dims, dims);
      if (d < best.bound()) best.offer(d);
    }
    return best.kth();
  }
  std::vector<T> row;
  row.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j != i) row.push_back(max_norm(query, base + j * dims, dims));
  }
  std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k - 1), row.end());
  return row[k - 1];
}

template <typename T>
std::size_t brute_count(const PointSet<T>& pts, std::size_t i, T radius) {
  const std::size_t n = pts.rows();
  const std::size_t dims = pts.dims();
  const T* base = pts.data();
  const T* query = base + i * dims;
  std::size_t count = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    if (max_norm(query, base + j * dims, dims) < radius) ++count;
  }
  return count;
}

// Static bounding-box tree. Points are copied into tree order so that leaves
// are contiguous in memory.
template <typename T>
class KdTree {
 public:
  static constexpr std::size_t leaf_size = 16;

  explicit KdTree(const PointSet<T>& pts) : dims_(pts.dims()), n_(pts.rows()) {
    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(2 * (n_ / leaf_size + 1));
    build(pts, 0, n_);
    coords_.resize(n_ * dims_);
    for (std::size_t p = 0; p < n_; ++p) {
      std::copy_n(pts.data() + order_[p] * dims_, dims_, coords_.data() + p * dims_);
    }
  }

  T kth(const T* query, std::size_t self, std::size_t k) const {
    SmallestK<T> best(k);
    knn(0, query, self, best);
    return best.kth();
  }

  // Points j != self with max_norm(query, p_j) < radius.
  // Only valid for queries that are themselves tree points.
  std::size_t count_excluding_self(const T* query, T radius) const {
    if (!(radius > T(0))) return 0;
    return count_node(0, query, radius) - 1;  // self sits at distance 0 < radius
  }

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t left = 0;  // 0 for leaves (root is never a child)
    std::size_t right = 0;
    std::size_t box = 0;  // offset into boxes_: dims lows followed by dims highs
  };

  std::size_t build(const PointSet<T>& pts, std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back(Node{begin, end, 0, 0, boxes_.size()});
    boxes_.resize(boxes_.size() + 2 * dims_);
    T* lo = boxes_.data() + nodes_[id].box;
    T* hi = lo + dims_;
    for (std::size_t c = 0; c < dims_; ++c) {
      lo[c] = std::numeric_limits<T>::infinity();
      hi[c] = -std::numeric_limits<T>::infinity();
    }
    for (std::size_t p = begin; p < end; ++p) {
      const T* x = pts.data() + order_[p] * dims_;
      for (std::size_t c = 0; c < dims_; ++c) {
        lo[c] = std::min(lo[c], x[c]);
        hi[c] = std::max(hi[c], x[c]);
      }
    }
    if (end - begin <= leaf_size) return id;

    std::size_t split = 0;
    T widest = -1;
    for (std::size_t c = 0; c < dims_; ++c) {
      if (hi[c] - lo[c] > widest) {
        widest = hi[c] - lo[c];
        split = c;
      }
    }
    if (!(widest > T(0))) return id;  // all points identical

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) {
                       return pts(a, split) < pts(b, split);
                     });
    const std::size_t left = build(pts, begin, mid);
    const std::size_t right = build(pts, mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  // Lower bound on the max-norm distance from query to any point in the box.
  T min_dist(const Node& node, const T* query) const noexcept {
    const T* lo = boxes_.data() + node.box;
    const T* hi = lo + dims_;
    T d = 0;
    for (std::size_t c = 0; c < dims_; ++c) {
      T gap = 0;
      if (query[c] < lo[c]) {
        gap = lo[c] - query[c];
      } else if (query[c] > hi[c]) {
        gap = query[c] - hi[c];
      }
      d = gap > d ? gap : d;
    }
    return d;
  }

  // Upper bound on the max-norm distance from query to any point in the box.
  T max_dist(const Node& node, const T* query) const noexcept {
    const T* lo = boxes_.data() + node.box;
    const T* hi = lo + dims_;
    T d = 0;
    for (std::size_t c = 0; c < dims_; ++c) {
      const T a = std::abs(query[c] - lo[c]);
      const T b = std::abs(query[c] - hi[c]);
      const T m = a > b ? a : b;
      d = m > d ? m : d;
    }
    return d;
  }

  void knn(std::size_t id, const T* query, std::size_t self, SmallestK<T>& best) const {
    const Node& node = nodes_[id];
    if (node.left == 0) {
      for (std::size_t p = node.begin; p < node.end; ++p) {
        if (order_[p] == self) continue;
        const T d = max_norm(query, coords_.data() + p * dims_, dims_);
        if (d < best.bound()) best.offer(d);
      }
      return;
    }
    const Node& l = nodes_[node.left];
    const Node& r = nodes_[node.right];
    const T dl = min_dist(l, query);
    const T dr = min_dist(r, query);
    if (dl <= dr) {
      if (dl < best.bound()) knn(node.left, query, self, best);
      if (dr < best.bound()) knn(node.right, query, self, best);
    } else {
      if (dr < best.bound()) knn(node.right, query, self, best);
      if (dl < best.bound()) knn(node.left, query, self, best);
    }
  }

  std::size_t count_node(std::size_t id, const T* query, T radius) const {
    const Node& node = nodes_[id];
    if (!(min_dist(node, query) < radius)) return 0;
    if (max_dist(node, query) < radius) return node.end - node.begin;
    if (node.left == 0) {
      std::size_t c = 0;
      for (std::size_t p = node.begin; p < node.end; ++p) {
        if (max_norm(query, coords_.data() + p * dims_, dims_) < radius) ++c;
      }
      return c;
    }
    return count_node(node.left, query, radius) + count_node(node.right, query, radius);
  }

  std::size_t dims_;
  std::size_t n_;
  std::vector<std::size_t> order_;
  std::vector<T> coords_;
  std::vector<T> boxes_;
  std::vector<Node> nodes_;
};

inline bool use_tree(SearchMethod method, std::size_t n) {
  switch (method) {
    case SearchMethod::brute_force: return false;
    case SearchMethod::kd_tree: return true;
    case SearchMethod::automatic: return n >= 256;
  }
  return false;
}

}  // namespace detail

// k-th smallest max-norm distance from each point to the other points of the
// chunk (self excluded).
template <typename T>
std::vector<T> knn_kth_distances(const PointSet<T>& points, std::size_t k,
                                 Parallelism parallelism = Parallelism::sequential(),
                                 SearchMethod method = SearchMethod::automatic) {
  const std::size_t n = points.rows();
  detail::check_chunk_shape(n, points.dims());
  detail::check_k(k, n);
  std::vector<T> out(n);
  if (detail::use_tree(method, n)) {
    const detail::KdTree<T> tree(points);
    parallel_for(
        n, parallelism, [&](std::size_t i) { out[i] = tree.kth(points.data() + i * points.dims(), i, k); },
        64);
  } else {
    parallel_for(n, parallelism, [&](std::size_t i) { out[i] = detail::brute_kth(points, i, k); }, 64);
  }
  return out;
}

// Number of points j != i strictly closer than radii[i] to point i.
template <typename T>
std::vector<std::size_t> radius_counts(const PointSet<T>& points, std::span<const T> radii,
                                       Parallelism parallelism = Parallelism::sequential(),
                                       SearchMethod method = SearchMethod::automatic) {
  const std::size_t n = points.rows();
  detail::check_chunk_shape(n, points.dims());
  if (radii.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "got " + std::to_string(radii.size()) + " radii for " +
                                              std::to_string(n) + " points");
  }
  for (T r : radii) {
    if (!(r >= T(0))) throw Error(ErrorCode::InvalidArgument, "radii must be non-negative");
  }
  std::vector<std::size_t> out(n);
  if (detail::use_tree(method, n)) {
    const detail::KdTree<T> tree(points);
    parallel_for(
        n, parallelism,
        [&](std::size_t i) { out[i] = tree.count_excluding_self(points.data() + i * points.dims(), radii[i]); }, 64);
  } else {
    parallel_for(n, parallelism, [&](std::size_t i) { out[i] = detail::brute_count(points, i, radii[i]); },
                 64);
  }
  return out;
}

// One search problem: a joint-space chunk plus row-aligned projections of it.
template <typename T>
struct SearchProblem {
  Chunk<T> joint;
  std::vector<PointSet<T>> marginals;
};

template <typename T>
struct SearchStats {
  std::vector<T> kth_distance;                          // joint space
  std::vector<std::vector<std::size_t>> marginal_counts;  // one per marginal, radius = kth_distance

  friend bool operator==(const SearchStats&, const SearchStats&) = default;
};

// Either the statistics of one chunk or the error that chunk raised.
template <typename T>
struct SearchOutcome {
  std::int64_t chunk_id = 0;
  std::optional<SearchStats<T>> stats;
  std::optional<Error> error;

  bool ok() const noexcept { return stats.has_value(); }

  const SearchStats<T>& value() const {
    if (!stats) throw *error;
    return *stats;
  }
};

// Runs the joint kNN followed by the marginal radius counts of one problem.
template <typename T>
SearchStats<T> search_problem(const SearchProblem<T>& problem, std::size_t k, Parallelism parallelism,
                              SearchMethod method) {
  const std::size_t n = problem.joint.points.rows();
  for (const auto& m : problem.marginals) {
    if (m.rows() != n) {
      throw Error(ErrorCode::ShapeMismatch, "marginal has " + std::to_string(m.rows()) +
                                                " rows, joint chunk has " + std::to_string(n));
    }
  }
  SearchStats<T> stats;
  stats.kth_distance = knn_kth_distances(problem.joint.points, k, parallelism, method);
  stats.marginal_counts.reserve(problem.marginals.size());
  for (const auto& m : problem.marginals) {
    stats.marginal_counts.push_back(
        radius_counts(m, std::span<const T>(stats.kth_distance), parallelism, method));
  }
  return stats;
}

// Searches many independent chunks. Output order matches input order, a
// failing chunk does not abort the others, and results are identical for any
// degree of parallelism.
template <typename T>
std::vector<SearchOutcome<T>> batch_search(std::span<const SearchProblem<T>> problems, std::size_t k,
                                           Parallelism parallelism = Parallelism{},
                                           SearchMethod method = SearchMethod::automatic) {
  std::vector<SearchOutcome<T>> out(problems.size());
  auto run_one = [&](std::size_t c, Parallelism inner) {
    out[c].chunk_id = problems[c].joint.chunk_id;
    try {
      out[c].stats = search_problem(problems[c], k, inner, method);
    } catch (const Error& e) {
      out[c].error = e;
    }
  };
  const std::size_t workers = parallelism.resolved();
  if (problems.size() >= workers) {
    parallel_for(problems.size(), parallelism, [&](std::size_t c) { run_one(c, Parallelism::sequential()); });
  } else {
    for (std::size_t c = 0; c < problems.size(); ++c) run_one(c, parallelism);
  }
  return out;
}

template <typename T>
std::vector<SearchOutcome<T>> batch_search(const std::vector<SearchProblem<T>>& problems, std::size_t k,
                                           Parallelism parallelism = Parallelism{},
                                           SearchMethod method = SearchMethod::automatic) {
  return batch_search(std::span<const SearchProblem<T>>(problems), k, parallelism, method);
}

// Reference loop: one chunk at a time, one worker, brute force.
template <typename T>
std::vector<SearchOutcome<T>> sequential_search(std::span<const SearchProblem<T>> problems, std::size_t k,
                                                SearchMethod method = SearchMethod::brute_force) {
  return batch_search(problems, k, Parallelism::sequential(), method);
}

}  // namespace ete
