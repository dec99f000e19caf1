#pragma once

#include <cstddef>
#include <functional>

namespace sfanc {

// Number of worker threads used by parallel_for. 0 = hardware concurrency.
void set_thread_count(int n);
int thread_count();

// Runs fn(begin, end) over a static partition of [0, n). Each index is
// handled by exactly one invocation, so writes to disjoint per-index slots
// are deterministic regardless of the thread count. Reductions must be
// done by the caller in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace sfanc
