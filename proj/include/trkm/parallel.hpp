#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace trkm {

namespace detail {
inline std::atomic<unsigned>& thread_setting() {
  static std::atomic<unsigned> threads{1};
  return threads;
}

inline bool& inside_worker() {
  thread_local bool inside = false;
  return inside;
}
}  // namespace detail

// 0 selects the hardware concurrency.
inline void set_num_threads(unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  detail::thread_setting().store(threads);
}

inline unsigned num_threads() { return detail::thread_setting().load(); }

// Runs body(i) for i in [0, count). Work items must be independent and must not
// throw; results never depend on how the range is split.
template <typename Body>
void parallel_for(std::size_t count, Body&& body, unsigned threads = num_threads()) {
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  // nested loops run serially inside a worker
  if (threads <= 1 || detail::inside_worker()) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      detail::inside_worker() = true;
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  }
}

}  // namespace trkm
