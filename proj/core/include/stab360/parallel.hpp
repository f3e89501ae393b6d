#pragma once

#include <cstddef>
#include <functional>

namespace stab360 {

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
///
/// Work is split into contiguous chunks; callers write results into
/// preallocated slots so output never depends on scheduling. The first
/// exception (lowest index) is rethrown after all workers join.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace stab360
