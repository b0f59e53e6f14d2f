#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hermite {

inline int default_thread_count() {
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(item, worker) for item in [0, count) on `threads` workers and
/// returns once all items are done. Deterministic mode assigns item i to
/// worker i % threads in ascending order; otherwise workers pull items from
/// a shared counter. The first exception thrown by any worker is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, int threads, bool deterministic, Fn&& fn) {
  const int workers = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i, 0);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&](int worker) {
    try {
      if (deterministic) {
        for (std::size_t i = static_cast<std::size_t>(worker); i < count;
             i += static_cast<std::size_t>(workers))
          fn(i, worker);
      } else {
        for (std::size_t i = next++; i < count; i = next++) fn(i, worker);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (int w = 1; w < workers; ++w) pool.emplace_back(body, w);
    body(0);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace hermite
