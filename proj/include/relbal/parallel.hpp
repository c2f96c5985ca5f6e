#pragma once

#include <cstddef>
#include <functional>

namespace relbal {

/// Caps the number of worker threads used by grid loops (0 = hardware concurrency).
void set_thread_count(unsigned count);
unsigned thread_count();

/// Runs body(chunk) for chunk in [0, chunks). Chunks are distributed over the worker
/// pool; callers reduce per-chunk partial results in chunk order, so results do not
/// depend on the number of threads.
void parallel_chunks(std::size_t chunks, const std::function<void(std::size_t)>& body);

}  // namespace relbal
