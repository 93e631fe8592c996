#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace topics {

inline int resolve_threads(int requested, std::size_t tasks) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  int t = requested > 0 ? requested : hw;
  if (tasks < static_cast<std::size_t>(t)) t = static_cast<int>(std::max<std::size_t>(tasks, 1));
  return t;
}

// Runs body(i) for i in [0, nTasks). Each task must write only to its own
// output slot, which keeps results identical for any thread count.
template <class F>
void parallel_for(std::size_t nTasks, int threads, F&& body) {
  threads = resolve_threads(threads, nTasks);
  if (threads <= 1) {
    for (std::size_t i = 0; i < nTasks; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex errorLock;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::size_t i = next.fetch_add(1);
        if (i >= nTasks) break;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(errorLock);
          if (!error) error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace topics
