#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace sahiqc {

/// Runs fn(i) for i in [0, n) on a small thread pool. Results must be
/// written by fn into caller-owned per-index slots so output order never
/// depends on scheduling. The first exception thrown by any worker is
/// rethrown on the calling thread.
inline void parallel_for_indexed(std::size_t n,
                                 const std::function<void(std::size_t)>& fn,
                                 unsigned max_threads = 0) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (max_threads != 0 && max_threads < hw) hw = max_threads;
  if (n < 2 || hw < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(hw);
  for (unsigned w = 0; w < hw; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += hw) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace sahiqc
