#pragma once

#include <cstddef>
#include <functional>

namespace voxrecon {

/// Number of hardware threads, at least 1.
std::size_t default_thread_count();

/// Splits [0, n) into at most `threads` contiguous chunks (static partition, so the
/// assignment of items to workers depends only on n and threads) and runs
/// fn(worker, begin, end) for each chunk. Returns the number of workers used.
std::size_t parallel_chunks(std::size_t n, std::size_t threads,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

} // namespace voxrecon
