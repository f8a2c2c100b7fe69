#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace avgsde {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs body(i) for i in [0, n) across `threads` workers in contiguous
// blocks. Replicas own their state and write to distinct slots, so results
// do not depend on scheduling. The first worker exception is rethrown.
inline void parallel_replicas(long n, int threads,
                              const std::function<void(long)>& body) {
  threads = resolve_threads(threads);
  if (threads == 1 || n < 2 * threads) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  const long block = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const long begin = t * block;
    const long end = std::min(n, begin + block);
    if (begin >= end) break;
    pool.emplace_back([&, t, begin, end] {
      try {
        for (long i = begin; i < end; ++i) body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace avgsde
