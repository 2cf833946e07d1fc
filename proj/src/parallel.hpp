#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace llmdcd::detail {

inline std::size_t resolve_threads(std::size_t requested) {
  if (requested) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

/// Runs task(t) for t in [0, tasks) on up to `threads` workers. Callers keep
/// one output slot per task and reduce in task order, so results do not
/// depend on the thread count.
template <class Task>
void parallel_tasks(std::size_t tasks, std::size_t threads, Task&& task) {
  threads = std::min(resolve_threads(threads), tasks);
  if (threads <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) task(t);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t w = 0; w < threads; ++w)
    workers.emplace_back([&, w] {
      try {
        for (std::size_t t = w; t < tasks; t += threads) task(t);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& th : workers) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace llmdcd::detail
