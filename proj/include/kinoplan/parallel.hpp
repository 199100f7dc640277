#pragma once

#include <cstddef>
#include <functional>

namespace kinoplan {

/// Worker-pool width: KINOPLAN_THREADS when set (>=1), else the hardware
/// concurrency.
int thread_budget();

/// Run fn(0..n-1) across up to `threads` workers (0 = thread_budget()).
/// Indices are claimed atomically; each index must write only its own
/// output slot, which keeps results identical for any worker count.
/// The first exception thrown by any index is rethrown after all workers
/// finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace kinoplan
