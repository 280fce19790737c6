#pragma once

#include <cstddef>
#include <functional>

namespace driftmc {

/// Worker count: DRIFTMC_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

/// Runs body(begin, end) over contiguous blocks covering [0, n). Blocks are
/// fixed by (n, thread_count()) alone, so results written by index are
/// independent of scheduling. The first exception thrown by a worker is
/// rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace driftmc
