#pragma once

// Timing harness for batched kNN + range search over duplicated chunks:
// the parallel engine against a one-worker loop over the same chunks.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "ete/error.hpp"
#include "ete/neighbor_engine.hpp"
#include "ete/parallel.hpp"
#include "ete/rng.hpp"

namespace ete {

struct BenchRow {
  std::size_t n_chunks = 0;
  double seconds_parallel = 0.0;
  double seconds_sequential = 0.0;
  double speedup = 0.0;  // seconds_sequential / seconds_parallel
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::size_t chunk_points = 0;
  std::size_t joint_dim = 0;
  std::size_t marginal_dim = 0;
  std::size_t k = 0;
  std::size_t workers = 0;
  std::size_t repeats = 0;
  std::string hardware;
};

struct BenchConfig {
  std::size_t chunk_points = 30094;
  std::size_t joint_dim = 17;
  std::size_t marginal_dim = 8;
  std::size_t k = 4;
  std::vector<std::size_t> n_chunks_list{1, 2, 4, 8, 16, 32, 64};
  std::size_t repeats = 3;
  std::uint64_t seed = 0;
  Parallelism parallelism{};
  SearchMethod method = SearchMethod::brute_force;
};

// Reference numbers of the original single-core CPU and GPU implementation,
// printed for context only.
struct PublishedReference {
  static constexpr double cpu_knn_seconds = 1.26;
  static constexpr double cpu_range_seconds = 24.1;
  static constexpr double gpu_speedups[3] = {22.0, 33.0, 50.0};
};

inline std::string hardware_description() {
  std::string model = "unknown cpu";
  std::ifstream cpuinfo("/proc/cpuinfo");
  for (std::string line; std::getline(cpuinfo, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto pos = line.find(':');
      if (pos != std::string::npos) model = line.substr(pos + 2);
      break;
    }
  }
  return model + ", " + std::to_string(std::thread::hardware_concurrency()) + " hardware threads";
}

namespace detail {

inline SearchProblem<float> bench_problem(const BenchConfig& c) {
  Rng rng = make_rng(c.seed, {stream::bench});
  PointSet<float> joint(c.chunk_points, c.joint_dim);
  for (float& v : joint.flat_mut()) v = static_cast<float>(uniform01(rng));
  std::vector<std::size_t> cols(c.marginal_dim);
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  SearchProblem<float> p;
  p.marginals.push_back(joint.project(cols));
  p.joint = Chunk<float>{std::move(joint), 0};
  return p;
}

inline void check_bench_config(const BenchConfig& c) {
  if (c.chunk_points < 2 || c.joint_dim < 1 || c.marginal_dim < 1 || c.k < 1 || c.repeats < 1) {
    throw Error(ErrorCode::InvalidArgument, "bench geometry, k and repeats must be positive");
  }
  if (c.marginal_dim > c.joint_dim) throw Error(ErrorCode::InvalidArgument, "marginal_dim exceeds joint_dim");
  if (c.n_chunks_list.empty()) throw Error(ErrorCode::InvalidArgument, "n_chunks_list is empty");
  for (std::size_t i = 0; i < c.n_chunks_list.size(); ++i) {
    if (c.n_chunks_list[i] < 1 || (i > 0 && c.n_chunks_list[i] <= c.n_chunks_list[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "n_chunks_list must be positive and ascending");
    }
  }
}

template <class Fn>
double seconds(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline bool same_stats(const SearchOutcome<float>& a, const SearchOutcome<float>& b) {
  if (!a.ok() || !b.ok()) return false;
  return a.value().kth_distance == b.value().kth_distance && a.value().marginal_counts == b.value().marginal_counts;
}

}  // namespace detail

inline BenchReport run_bench(const BenchConfig& config, std::ostream* progress = nullptr) {
  detail::check_bench_config(config);
  const SearchProblem<float> base = detail::bench_problem(config);

  BenchReport report;
  report.chunk_points = config.chunk_points;
  report.joint_dim = config.joint_dim;
  report.marginal_dim = config.marginal_dim;
  report.k = config.k;
  report.workers = config.parallelism.resolved();
  report.repeats = config.repeats;
  report.hardware = hardware_description();

  for (std::size_t n_chunks : config.n_chunks_list) {
    std::vector<SearchProblem<float>> problems(n_chunks, base);
    for (std::size_t i = 0; i < n_chunks; ++i) problems[i].joint.chunk_id = static_cast<std::int64_t>(i);
    const std::span<const SearchProblem<float>> view(problems);

    std::vector<SearchOutcome<float>> par, seq;
    auto run_par = [&] { par = batch_search(view, config.k, config.parallelism, config.method); };
    auto run_seq = [&] { seq = sequential_search(view, config.k, config.method); };
    run_par();  // warm-up, discarded
    run_seq();
    std::vector<double> tp, ts;
    for (std::size_t rep = 0; rep < config.repeats; ++rep) {
      tp.push_back(detail::seconds(run_par));
      ts.push_back(detail::seconds(run_seq));
    }
    for (std::size_t i = 0; i < n_chunks; ++i) {
      if (!detail::same_stats(par[i], seq[i]) || !detail::same_stats(par[i], par[0])) {
        throw Error(ErrorCode::ResultMismatch, "chunk " + std::to_string(i) + " of " + std::to_string(n_chunks) +
                                                   ": parallel and sequential results differ");
      }
    }
    BenchRow row;
    row.n_chunks = n_chunks;
    row.seconds_parallel = detail::median_of(tp);
    row.seconds_sequential = detail::median_of(ts);
    row.speedup = row.seconds_sequential / row.seconds_parallel;
    report.rows.push_back(row);
    if (progress) {
      *progress << "n_chunks=" << n_chunks << " parallel=" << row.seconds_parallel
                << "s sequential=" << row.seconds_sequential << "s speedup=" << row.speedup << '\n';
    }
  }
  return report;
}

inline void write_bench_csv(std::ostream& os, const BenchReport& r) {
  os << "# points=" << r.chunk_points << " joint_dim=" << r.joint_dim << " marginal_dim=" << r.marginal_dim
     << " k=" << r.k << " workers=" << r.workers << " repeats=" << r.repeats << " hardware=" << r.hardware << '\n';
  os << "n_chunks,seconds_parallel,seconds_sequential,speedup\n";
  for (const auto& row : r.rows) {
    os << row.n_chunks << ',' << row.seconds_parallel << ',' << row.seconds_sequential << ',' << row.speedup << '\n';
  }
}

}  // namespace ete
