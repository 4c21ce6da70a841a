#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace dtwapprox {

inline unsigned default_workers() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

// Resolve a user-supplied worker count: 0 means "pick for me".
inline unsigned resolve_workers(unsigned requested) {
  return requested == 0 ? default_workers() : requested;
}

// Runs fn(i) for every i in [0, n), split into fixed contiguous chunks.
// Each index is visited exactly once, so writing to per-index slots needs no
// synchronization, and the result does not depend on the worker count.
inline void parallel_for(std::size_t n, unsigned workers,
                         const std::function<void(std::size_t)>& fn) {
  workers = resolve_workers(workers);
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  if (workers > n) workers = static_cast<unsigned>(n);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = static_cast<std::size_t>(w) * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace dtwapprox
