#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace stripwet {

/// Runs body(block) for block in [0, n_blocks) on up to `threads` workers.
/// Blocks are the unit of determinism: callers give every block its own rng
/// stream and merge per-block results in block order.
template <class Body>
void parallel_blocks(std::size_t n_blocks, unsigned threads, Body&& body) {
  threads = std::max(1u, threads);
  if (threads == 1 || n_blocks <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) body(b);
    return;
  }
  std::mutex mutex;
  std::size_t next = 0;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      std::size_t b;
      {
        std::lock_guard lock(mutex);
        if (next >= n_blocks || error) return;
        b = next++;
      }
      try {
        body(b);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const auto n = std::min<std::size_t>(threads, n_blocks);
  pool.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace stripwet
