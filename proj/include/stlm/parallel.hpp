#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace stlm {

// Runs fn(i) for i in [0, n) over `threads` workers in contiguous chunks.
// Callers write results into index i of a preallocated buffer, which makes
// the outcome independent of the thread count; threads <= 1 runs inline.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const auto workers = static_cast<std::size_t>(threads) < n ? static_cast<std::size_t>(threads) : n;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace stlm
