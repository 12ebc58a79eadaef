#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ete {

// Number of workers used by parallel sections. Only affects wall-clock time;
// every parallel section in the library writes to per-item output slots, so
// results never depend on this value.
struct Parallelism {
  std::size_t workers = 0;  // 0 = hardware concurrency

  std::size_t resolved() const noexcept {
    if (workers > 0) return workers;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }

  static Parallelism sequential() noexcept { return Parallelism{1}; }
};

// Runs fn(i) for every i in [0, count), distributing indices dynamically in
// blocks of `grain`. The first exception thrown by any fn is rethrown after all
// workers have joined.
template <typename Fn>
void parallel_for(std::size_t count, Parallelism parallelism, Fn&& fn, std::size_t grain = 1) {
  if (count == 0) return;
  grain = std::max<std::size_t>(1, grain);
  const std::size_t blocks = (count + grain - 1) / grain;
  const std::size_t workers = std::min(parallelism.resolved(), blocks);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t block = next.fetch_add(1, std::memory_order_relaxed);
      if (block >= blocks) return;
      const std::size_t begin = block * grain;
      const std::size_t end = std::min(count, begin + grain);
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(blocks, std::memory_order_relaxed);
        return;
      }
    }
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace ete
