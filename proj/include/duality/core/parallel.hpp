#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace duality::core {

// Worker count from DUALITY_LAB_THREADS, else the hardware concurrency.
int default_workers();

// Seed, replicate count and worker count for a Monte Carlo experiment.
// Results never depend on `workers`.
struct McConfig {
  std::uint64_t seed = 1;
  std::size_t replicates = 1000;
  int workers = default_workers();
};

/// Evaluate fn(i) for i in [0, n) on a worker pool and return the results in
/// index order. fn must derive all randomness from i.
template <class R, class F>
std::vector<R> run_replicates(std::size_t n, int workers, F&& fn) {
  std::vector<R> out(n);
  const std::size_t w = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, std::max<std::size_t>(n, 1));
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  constexpr std::size_t kChunk = 16;
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    try {
      for (;;) {
        const std::size_t begin = next.fetch_add(kChunk);
        if (begin >= n) return;
        const std::size_t end = std::min(n, begin + kChunk);
        for (std::size_t i = begin; i < end; ++i) out[i] = fn(i);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      next.store(n);
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(w);
    for (std::size_t k = 0; k < w; ++k) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace duality::core
