#pragma once

#include <cstddef>
#include <functional>

namespace mtfer {

/// Deterministic mode pins execution to one thread. Results do not depend on
/// the thread count either way (work is split over independent examples and
/// reduced in example order), so the switch only trades speed for a trivially
/// sequential schedule.
void set_deterministic(bool on);
bool deterministic();

/// Worker count used outside deterministic mode (0 = hardware concurrency).
void set_thread_count(std::size_t n);
std::size_t effective_threads();

/// Reads MTFER_DETERMINISTIC, MTFER_THREADS and MTFER_SIMD.
void configure_from_environment();

/// Calls fn(begin, end) over contiguous chunks of [0, n), possibly in parallel.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace mtfer
