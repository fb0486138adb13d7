// gmmdiag/parallel.cpp

#include "gmmdiag/parallel.hpp"

#include <algorithm>
#include <stdexcept>

namespace gmmdiag {

std::vector<Range> split_even(std::size_t n, std::size_t parts) {
  if (parts == 0) throw std::invalid_argument("split_even: parts must be positive");
  std::vector<Range> out;
  out.reserve(parts);
  const std::size_t base = n / parts;
  const std::size_t extra = n % parts;
  std::size_t start = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t len = base + (p < extra ? 1 : 0);
    out.push_back({start, start + len});
    start += len;
  }
  return out;
}

BlockGrid::BlockGrid(std::size_t n_items) : n_items_(n_items) {
  std::size_t n_blocks = (n_items + kTargetBlockSize - 1) / kTargetBlockSize;
  n_blocks = std::clamp<std::size_t>(n_blocks, 1, kMaxBlocks);
  blocks_ = split_even(n_items, n_blocks);
}

std::size_t default_thread_count() noexcept {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void for_each_block(const BlockGrid& grid, std::size_t n_threads,
                    const std::function<void(std::size_t)>& fn) {
  const std::size_t n_blocks = grid.n_blocks();
  const std::size_t workers = std::clamp<std::size_t>(n_threads, 1, n_blocks);
  if (workers == 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
    return;
  }

  const auto runs = split_even(n_blocks, workers);
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    auto work = [&](std::size_t w) {
      try {
        for (std::size_t b = runs[w].begin; b < runs[w].end; ++b) fn(b);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    };
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work, w);
    work(0);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace gmmdiag
