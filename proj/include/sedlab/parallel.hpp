#pragma once

// Minimal fork-join helper for seed ensembles. The worker count comes from
// SED_LAB_THREADS when set, else std::thread::hardware_concurrency().

#include <cstddef>
#include <functional>

namespace sedlab {

int thread_count();

// Calls body(i) for i in [0, n). Work is split into contiguous chunks; the
// first exception thrown by any worker is rethrown after all have joined.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace sedlab
