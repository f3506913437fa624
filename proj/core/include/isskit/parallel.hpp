#pragma once

#include <cstddef>
#include <functional>

namespace isskit {

/// Thread budget for ensemble loops: hardware concurrency capped by the
/// ISSKIT_THREADS environment variable (a value of 1 forces serial runs).
std::size_t max_threads();

/// Runs fn(0..n-1), possibly across threads. Callers keep determinism by
/// writing each index's result into its own preallocated slot; reductions
/// happen after the loop in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace isskit
