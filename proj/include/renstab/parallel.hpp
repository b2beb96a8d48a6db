#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace renstab {

// Runs fn(i) for i in [0, count) on a small worker pool. Work item i owns
// slot i of whatever the caller writes into, so output order never depends
// on scheduling.
inline void parallel_for_index(long count, const std::function<void(long)>& fn,
                               unsigned threads = 0) {
  if (threads == 0) threads = std::thread::hardware_concurrency();
  if (threads <= 1 || count < 2) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  if (static_cast<long>(threads) > count) threads = static_cast<unsigned>(count);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::atomic<long> next{0};
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (long i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (std::thread& worker : pool) worker.join();
}

}  // namespace renstab
