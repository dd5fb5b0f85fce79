#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace ddshaper {

// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware
// concurrency). Each index owns its output slot, so results are identical
// for any worker count.
inline void parallel_for(long n, int threads,
                         const std::function<void(long)>& body) {
  if (n <= 0) return;
  unsigned int workers = threads > 0
                             ? static_cast<unsigned int>(threads)
                             : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned int>(workers, static_cast<unsigned int>(n));
  if (workers <= 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (unsigned int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (long i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace ddshaper
