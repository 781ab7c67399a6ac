#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace graspmap {

/// Worker cap: GRASPMAP_THREADS if set, else 1. Parallel sections must write
/// disjoint outputs with a fixed per-element reduction order, so results are
/// identical for any thread count. Re-read per call so callers can scope the
/// setting to one phase.
inline int worker_threads() {
  const char* env = std::getenv("GRASPMAP_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n < 1 ? 1 : n;
}

/// Runs fn(i) for i in [0, count), split contiguously across workers.
template <typename Fn>
void parallel_for(std::int64_t count, const Fn& fn) {
  const int threads = std::min<std::int64_t>(worker_threads(), count);
  if (threads <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::int64_t chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::int64_t lo = t * chunk;
    const std::int64_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace graspmap
