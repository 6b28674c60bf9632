#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace spongecake {

/// Resolves a user thread count; 0 means one per hardware thread.
inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count) on a pool of worker threads. Work items are claimed
/// dynamically, so callers must not depend on which thread runs which index. The first
/// exception thrown by any body is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next.store(count);
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace spongecake
