#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace threshova {

// Static partition of [0, n) over `threads` workers.  Work items must depend
// only on their index, so results are identical for any worker count.
inline void parallel_for(long n, int threads, const std::function<void(long)>& fn) {
  if (threads <= 1 || n < 2 * threads) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  long chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    long lo = t * chunk;
    long hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn]() {
      for (long i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Worker count from an explicit request, the THRESHOVA_THREADS environment
// variable, or 1.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("THRESHOVA_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

}  // namespace threshova
