#ifndef TPB_PARALLEL_HPP
#define TPB_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tpb {

inline unsigned default_worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs `fn(i)` for i in [0, n) on `workers` threads. Work is handed out in chunks from a
/// shared counter, so callers must write results by index to stay deterministic.
/// The first exception thrown by any task is rethrown on the calling thread.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn, std::size_t chunk = 1) {
  if (n == 0) return;
  workers = std::max(1u, workers);
  chunk = std::max<std::size_t>(1, chunk);
  if (workers == 1 || n <= chunk) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    try {
      for (;;) {
        const std::size_t begin = next.fetch_add(chunk);
        if (begin >= n) break;
        const std::size_t end = std::min(n, begin + chunk);
        for (std::size_t i = begin; i < end; ++i) fn(i);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      next.store(n);
    }
  };
  {
    std::vector<std::jthread> pool;
    const unsigned spawn = static_cast<unsigned>(std::min<std::size_t>(workers, (n + chunk - 1) / chunk));
    pool.reserve(spawn - 1);
    for (unsigned w = 1; w < spawn; ++w) pool.emplace_back(body);
    body();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace tpb

#endif  // TPB_PARALLEL_HPP
