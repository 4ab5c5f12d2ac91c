#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace slowfast {

/// Path-level parallelism settings shared by every module.
///
/// With `deterministic_reduce` set, reductions are evaluated over fixed-size
/// blocks combined in a fixed binary tree, so results are bit-identical for
/// any worker count. Otherwise each worker reduces one contiguous chunk and
/// the chunk partials are summed in order, which depends on `workers`.
struct ParallelOptions {
  unsigned workers = 1;
  bool deterministic_reduce = true;
  std::size_t block_size = 1024;
};

/// Runs body(begin, end) over [0, n) split into blocks of opts.block_size.
void parallel_for(std::size_t n, const ParallelOptions& opts,
                  const std::function<void(std::size_t, std::size_t)>& body);

/// Block boundaries used by reductions: fixed-size blocks in deterministic
/// mode, one chunk per worker otherwise.
std::vector<std::size_t> reduction_bounds(std::size_t n, const ParallelOptions& opts);

template <class T, class Map, class Combine>
T parallel_reduce(std::size_t n, const ParallelOptions& opts, T identity, Map map,
                  Combine combine) {
  const auto bounds = reduction_bounds(n, opts);
  const std::size_t n_blocks = bounds.size() - 1;
  if (n_blocks == 0) return identity;
  std::vector<T> partial(n_blocks, identity);
  ParallelOptions per_block = opts;
  per_block.block_size = 1;
  parallel_for(n_blocks, per_block, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) partial[b] = map(bounds[b], bounds[b + 1]);
  });
  if (!opts.deterministic_reduce) {
    T acc = partial[0];
    for (std::size_t b = 1; b < n_blocks; ++b) acc = combine(acc, partial[b]);
    return acc;
  }
  // fixed-arity (binary) tree
  std::size_t width = n_blocks;
  while (width > 1) {
    const std::size_t half = (width + 1) / 2;
    for (std::size_t i = 0; i + half < width; ++i) partial[i] = combine(partial[i], partial[i + half]);
    width = half;
  }
  return partial[0];
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  double stddev = 0.0;
};

/// Sample mean, sample standard deviation and standard error of the mean.
MeanSe mean_se(std::span<const double> values, const ParallelOptions& opts = {});

}  // namespace slowfast
