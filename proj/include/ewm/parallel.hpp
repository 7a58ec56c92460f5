#pragma once

#include <cstddef>
#include <functional>

namespace ewm {

/// Worker count used when a caller passes 0: EWM_WORKERS if set, else the
/// hardware concurrency.
int default_workers();

/// Runs body(i) for i in [0, n) on up to `workers` threads. Each index runs
/// exactly once; callers write results into slot i so the reduction order never
/// depends on scheduling. The exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

}  // namespace ewm
