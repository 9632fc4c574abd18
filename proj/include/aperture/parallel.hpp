#pragma once

#include <cstddef>
#include <functional>

namespace aperture {

/// Worker count from APERTURE_THREADS (unset or 0 means hardware
/// concurrency), never below 1.
std::size_t thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Each index
/// is handled by exactly one call, so results written to slot i do not depend
/// on scheduling. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace aperture
