#pragma once

#include <cstddef>
#include <functional>

namespace knnre {

// Worker count from KNNRE_WORKERS when `requested` is 0, falling back to 1.
std::size_t resolve_workers(std::size_t requested);

// Splits [0, n) into contiguous chunks of `grain` items and hands them to up
// to `workers` threads. Chunk boundaries do not depend on the worker count,
// so callers writing results by index get identical output for any count.
// The first exception thrown by a chunk is rethrown after all threads join.
void parallel_for(std::size_t n, std::size_t workers, std::size_t grain,
                  const std::function<void(std::size_t begin, std::size_t end)>& body);

}  // namespace knnre
