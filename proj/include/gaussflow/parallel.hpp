#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace gaussflow {

/// Worker count from GAUSSFLOW_THREADS, else the hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("GAUSSFLOW_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls f(i) for i in [0, count) over contiguous chunks. Each index must
/// write only its own output slot; callers reduce afterwards in index order,
/// so results do not depend on the thread count.
template <class F>
void parallel_for(std::size_t count, F&& f) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), count);
  if (workers <= 1 || count < 256) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&f, begin, end] {
      for (std::size_t i = begin; i < end; ++i) f(i);
    });
  }
}

}  // namespace gaussflow
