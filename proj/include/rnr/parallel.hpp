#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace rnr {

// Runs f(i) for i in [0,n).  Each index writes to its own output slot, so the
// partition into threads cannot change any result bit; reductions over the
// slots must use pairwise_sum.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& f) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  const std::size_t nt = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    pool.emplace_back([&, t]() {
      for (std::size_t i = t; i < n; i += nt) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace rnr
