#pragma once

#include <cstddef>
#include <functional>

namespace qsense {

/// Worker count from QSENSE_WORKERS (default 1). Values < 1 are treated as 1.
std::size_t worker_count();

/// Runs task(0..count-1) on up to `workers` threads. Tasks must write only to
/// their own output slot; the first exception thrown is rethrown after join.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& task);

}  // namespace qsense
