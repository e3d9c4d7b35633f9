#pragma once

#include <cstddef>
#include <functional>

namespace seadet {

// Number of workers to use when the caller passes 0: SEADET_JOBS if set,
// otherwise the hardware concurrency.
int default_jobs();

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Each index runs
// exactly once; the first exception thrown is rethrown after all workers
// have joined.
void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn);

}  // namespace seadet
