#pragma once

#include <cstdint>
#include <functional>

namespace hystop {

/// Worker cap: HYSTOP_THREADS env var if set, else hardware concurrency.
int max_threads();

/// Runs fn(i) for i in [0, n). Work items must be independent; results must
/// not depend on execution order. Falls back to a serial loop when n is
/// small or only one worker is available.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

} // namespace hystop
