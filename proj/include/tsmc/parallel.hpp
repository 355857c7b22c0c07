#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tsmc {

/// Runs fn(i) for i in [0, n). With n_threads <= 1 the loop is serial;
/// otherwise indices are split into contiguous blocks, one worker each.
/// fn must only write to state owned by index i, so the result is identical
/// for every thread count. n_threads == 0 means hardware concurrency.
template <typename Fn>
void parallel_for(int n, int n_threads, Fn&& fn) {
  if (n_threads == 0) {
    n_threads = static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads <= 0) n_threads = 1;
  }
  n_threads = std::min(n_threads, n);
  if (n_threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }

  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(n_threads));
  std::exception_ptr first_error;
  std::mutex error_mutex;

  const int chunk = (n + n_threads - 1) / n_threads;
  for (int t = 0; t < n_threads; ++t) {
    const int begin = t * chunk;
    const int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&, begin, end] {
      try {
        for (int i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace tsmc
