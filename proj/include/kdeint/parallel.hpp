#pragma once

#include <cstddef>
#include <functional>

namespace kdeint {

//! Worker count used by library internals. Defaults to KDEINT_THREADS when set,
//! otherwise the hardware concurrency.
std::size_t thread_count();

//! Overrides the worker count for subsequent calls; 0 restores the default.
void set_thread_count(std::size_t threads);

//! Runs body(i) for i in [0, count). Iterations must write disjoint state;
//! results then do not depend on the worker count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace kdeint
