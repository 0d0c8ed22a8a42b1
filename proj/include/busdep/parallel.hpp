#pragma once

#include <cstddef>
#include <functional>

namespace busdep {

int default_threads();

/// Runs fn over disjoint index blocks covering [0, n). Safe for per-slot
/// writes and row-parallel kernels only: block boundaries depend on the
/// thread count, so any cross-index reduction inside fn must be insensitive
/// to how the range is split. Runs inline when threads <= 1 or when called
/// from inside a pool worker.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace busdep
