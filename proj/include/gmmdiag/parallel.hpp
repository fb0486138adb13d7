// gmmdiag/parallel.hpp
//
// Data-parallel helpers. Work over N samples is cut into a fixed grid of
// contiguous blocks whose boundaries depend only on N. Threads take
// contiguous runs of blocks, and per-block partial results are reduced in
// ascending block order by the caller, so every floating point sum is formed
// in the same order no matter how many threads run.

#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace gmmdiag {

struct Range {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const Range&, const Range&) = default;
};

// Splits [0, n) into `parts` contiguous near-equal ranges (the first n % parts
// ranges hold one extra item). parts must be positive.
std::vector<Range> split_even(std::size_t n, std::size_t parts);

class BlockGrid {
 public:
  static constexpr std::size_t kTargetBlockSize = 1024;
  static constexpr std::size_t kMaxBlocks = 256;

  explicit BlockGrid(std::size_t n_items);

  std::size_t n_items() const noexcept { return n_items_; }
  std::size_t n_blocks() const noexcept { return blocks_.size(); }
  const Range& block(std::size_t b) const noexcept { return blocks_[b]; }
  const std::vector<Range>& blocks() const noexcept { return blocks_; }

 private:
  std::size_t n_items_;
  std::vector<Range> blocks_;
};

// Default worker count: std::thread::hardware_concurrency(), at least 1.
std::size_t default_thread_count() noexcept;

// Calls fn(b) for every block b in the grid, using up to n_threads workers
// over contiguous block runs. The first exception thrown by any worker is
// rethrown after all workers have joined; when several workers throw, the one
// covering the lowest block wins so error reporting does not depend on
// scheduling.
void for_each_block(const BlockGrid& grid, std::size_t n_threads,
                    const std::function<void(std::size_t)>& fn);

}  // namespace gmmdiag
