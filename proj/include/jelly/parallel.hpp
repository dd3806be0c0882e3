#pragma once

// Thread-pool-free parallel_for over an index range. Worker count defaults to
// the hardware concurrency and is capped by the JELLY_THREADS environment
// variable (values < 1 or unparsable fall back to 1). Work is split into
// contiguous chunks, one per worker, so results that are written to
// preallocated per-index slots stay deterministic regardless of thread count.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace jelly {

inline int effective_thread_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  const char* env = std::getenv("JELLY_THREADS");
  if (!env || !*env) return hw;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1) return 1;
  return static_cast<int>(std::min<long>(v, hw));
}

template <class Fn>
void parallel_for(std::int64_t begin, std::int64_t end, const Fn& fn) {
  std::int64_t n = end - begin;
  if (n <= 0) return;
  int threads = std::min<std::int64_t>(effective_thread_count(), n);
  if (threads <= 1) {
    for (std::int64_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  std::int64_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    std::int64_t lo = begin + t * chunk;
    std::int64_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace jelly
