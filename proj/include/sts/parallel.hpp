#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace sts {

/// Worker count: the override from set_thread_count when nonzero, else STS_THREADS
/// (0 or unset means hardware concurrency).
int thread_count();

/// Overrides STS_THREADS for the current process. 0 restores the environment value.
void set_thread_count(int threads);

/// Runs fn(i) for i in [0, n) across contiguous chunks. Each index is visited exactly once,
/// so callers that write disjoint outputs per index get schedule-independent results.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
}

}  // namespace sts
