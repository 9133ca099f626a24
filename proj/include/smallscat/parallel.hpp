#pragma once

#include <cstddef>
#include <functional>

namespace smallscat {

// Number of worker threads used by parallel loops. 0 selects the hardware
// concurrency. Results never depend on this value: every loop index writes
// its own output slot and reductions happen serially afterwards.
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs body(i) for i in [0, n) split into contiguous chunks.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace smallscat
