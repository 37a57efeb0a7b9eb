#pragma once

#include <cstddef>
#include <functional>

namespace eqstate {

// Worker count: EQSTATE_THREADS when set (>= 1), otherwise the hardware
// concurrency.
std::size_t thread_budget();

// Runs fn(i) for i in [0, n). Each index must write only its own output slot,
// which keeps results independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace eqstate
