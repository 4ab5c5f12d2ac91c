#include "slowfast/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace slowfast {

void parallel_for(std::size_t n, const ParallelOptions& opts,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  const std::size_t block = std::max<std::size_t>(1, opts.block_size);
  const std::size_t n_blocks = (n + block - 1) / block;
  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(std::max(1u, opts.workers), n_blocks));
  if (workers <= 1) {
    body(0, n);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      try {
        body(b * block, std::min(n, (b + 1) * block));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_blocks;
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<std::size_t> reduction_bounds(std::size_t n, const ParallelOptions& opts) {
  std::vector<std::size_t> bounds{0};
  if (n == 0) return bounds;
  if (opts.deterministic_reduce) {
    const std::size_t block = std::max<std::size_t>(1, opts.block_size);
    for (std::size_t b = block; b < n; b += block) bounds.push_back(b);
  } else {
    const std::size_t chunks = std::min<std::size_t>(std::max(1u, opts.workers), n);
    for (std::size_t c = 1; c < chunks; ++c) bounds.push_back(n * c / chunks);
  }
  bounds.push_back(n);
  return bounds;
}

MeanSe mean_se(std::span<const double> values, const ParallelOptions& opts) {
  MeanSe out;
  const std::size_t n = values.size();
  if (n == 0) return out;
  const double sum = parallel_reduce(
      n, opts, 0.0,
      [&](std::size_t b, std::size_t e) {
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) s += values[i];
        return s;
      },
      [](double a, double b) { return a + b; });
  out.mean = sum / static_cast<double>(n);
  if (n < 2) return out;
  const double ss = parallel_reduce(
      n, opts, 0.0,
      [&](std::size_t b, std::size_t e) {
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) {
          const double d = values[i] - out.mean;
          s += d * d;
        }
        return s;
      },
      [](double a, double b) { return a + b; });
  out.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  out.se = out.stddev / std::sqrt(static_cast<double>(n));
  return out;
}

}  // namespace slowfast
