#pragma once

#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cex::detail {

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs fn(i) for i in [0, count) on up to `workers` threads, striding by
/// worker index. Each index must write only its own slot, which keeps results
/// independent of scheduling. The first exception is rethrown after joining.
template <typename F>
void parallel_for(std::size_t count, int workers, F&& fn) {
  workers = resolve_workers(workers);
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace cex::detail
