#pragma once

#include <cstddef>
#include <functional>

namespace pmmd {

// Worker count for internal loops. Defaults to PMMD_THREADS when set, else the
// hardware concurrency. Results never depend on this value.
unsigned thread_count();
void set_thread_count(unsigned threads);

// Runs body(begin, end) over contiguous chunks of [0, count).
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace pmmd
