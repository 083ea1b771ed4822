#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace ctp::detail {

inline unsigned resolve_workers(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Run fn(begin, end) over contiguous chunks of [0, total) on `workers`
/// threads. Chunk boundaries are a function of (total, workers) only; any
/// fn whose merged result is partition-independent stays deterministic.
template <class Fn>
void parallel_chunks(std::uint64_t total, unsigned workers, Fn&& fn) {
  workers = resolve_workers(workers);
  if (workers <= 1 || total < 2) {
    fn(std::uint64_t{0}, total);
    return;
  }
  if (workers > total) workers = static_cast<unsigned>(total);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::uint64_t base = total / workers, extra = total % workers;
  std::uint64_t begin = 0;
  for (unsigned w = 0; w < workers; ++w) {
    const std::uint64_t len = base + (w < extra ? 1 : 0);
    pool.emplace_back([&fn, begin, len] { fn(begin, begin + len); });
    begin += len;
  }
  for (auto& t : pool) t.join();
}

}  // namespace ctp::detail
