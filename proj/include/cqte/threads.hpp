#pragma once

#include <cstddef>
#include <functional>

namespace cqte {

//! Resolve a worker-pool size: explicit request, else the CQTE_THREADS
//! environment variable, else the hardware concurrency.
unsigned resolve_threads(int requested);

//! Run body(0..n-1) on up to `threads` workers. Work items must be mutually
//! independent and write only to their own output slots; results are then
//! identical for every thread count. If several items throw, the exception of
//! the lowest index is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

} // namespace cqte
