// Bounded worker pool for independent jobs.
#ifndef TRIGRATE_PARALLEL_HPP
#define TRIGRATE_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace trigrate {

/// Worker count from TRIGRATE_WORKERS, else the hardware concurrency.
int default_workers();

/// Calls fn(i) for i in [0, count) on up to `workers` threads. The first
/// exception thrown by a job is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const auto w = static_cast<std::size_t>(std::max(1, workers));
  if (w == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  const std::size_t nthreads = std::min(w, count);
  threads.reserve(nthreads);
  for (std::size_t k = 0; k < nthreads; ++k) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace trigrate

#endif  // TRIGRATE_PARALLEL_HPP
