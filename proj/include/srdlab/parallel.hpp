#pragma once
// Deterministic work splitting: items are processed in fixed-size blocks whose
// layout depends only on (n, block_size), never on the worker count, so any
// parallel run reproduces the serial result bit for bit when callers keep
// per-block state and merge it in block order.

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace srd {

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

inline constexpr std::uint64_t kBlockSize = 64;

// fn(block_index, begin, end) is called exactly once per block, on some thread
template <class Fn>
void parallel_blocks(std::uint64_t n, int workers, Fn&& fn) {
  const std::uint64_t n_blocks = (n + kBlockSize - 1) / kBlockSize;
  workers = resolve_workers(workers);
  if (workers <= 1 || n_blocks <= 1) {
    for (std::uint64_t b = 0; b < n_blocks; ++b)
      fn(b, b * kBlockSize, std::min(n, (b + 1) * kBlockSize));
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto work = [&] {
    for (;;) {
      std::uint64_t b = next.fetch_add(1, std::memory_order_relaxed);
      if (b >= n_blocks) return;
      try {
        fn(b, b * kBlockSize, std::min(n, (b + 1) * kBlockSize));
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int i = 0; i < workers; ++i) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace srd
