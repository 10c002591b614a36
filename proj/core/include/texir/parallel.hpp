#pragma once

#include <cstddef>
#include <functional>

namespace texir {

// Global worker count. 0 means hardware concurrency.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [0, n). Work items must be independent; output
// written by index so results do not depend on the worker count.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace texir
