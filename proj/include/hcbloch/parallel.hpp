#pragma once

// Thread-count setting shared by row-parallel kernels. Work is split into
// contiguous chunks with no cross-chunk reductions, so results do not
// depend on the thread count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace hcbloch::parallel {

inline std::atomic<int>& thread_setting() {
  static std::atomic<int> n{1};
  return n;
}

inline void set_threads(int n) { thread_setting().store(std::max(1, n)); }
inline int threads() { return thread_setting().load(); }

/// Calls fn(begin, end) over [0, count) split into contiguous chunks.
template <typename Fn>
void for_chunks(std::size_t count, Fn&& fn, std::size_t min_chunk = 1 << 14) {
  const auto nt = static_cast<std::size_t>(threads());
  if (nt <= 1 || count < 2 * min_chunk) {
    fn(std::size_t{0}, count);
    return;
  }
  const std::size_t chunks = std::min(nt, count / min_chunk);
  const std::size_t step = (count + chunks - 1) / chunks;
  std::vector<std::jthread> pool;
  pool.reserve(chunks - 1);
  for (std::size_t t = 1; t < chunks; ++t) {
    const std::size_t b = t * step;
    const std::size_t e = std::min(count, b + step);
    if (b < e) pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  fn(std::size_t{0}, std::min(count, step));
}

}  // namespace hcbloch::parallel
