#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace condu {

//! Worker count used when the caller does not set one.
inline std::size_t
default_threads() noexcept
{
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

//! Runs body(i) for i in [0, count) on up to `threads` workers. Each index
//! runs exactly once; callers write into preallocated slots, so results do
//! not depend on scheduling. The first exception thrown is rethrown here
//! after all workers have stopped.
template <class Body>
void
parallel_for(std::size_t count, std::size_t threads, Body&& body)
{
  if (count == 0)
    return;
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i)
      body(i);
    return;
  }
  std::atomic<std::size_t> next{ 0 };
  std::atomic<bool> failed{ false };
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count)
        return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error)
          error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (std::size_t w = 0; w + 1 < threads; ++w)
    pool.emplace_back(worker);
  worker();
  for (auto& t : pool)
    t.join();
  if (error)
    std::rethrow_exception(error);
}

} // namespace condu
