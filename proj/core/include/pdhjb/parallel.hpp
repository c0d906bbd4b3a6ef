#pragma once

#include <cstddef>
#include <functional>

namespace pdhjb {

// Global cap on worker threads (the CLI's --threads). 0 means hardware concurrency.
void set_worker_count(int workers);
int worker_count();

// Runs body(i) for i in [0, n). Work items must write only to their own slots so the
// result is identical for any worker count. Calls made from inside a parallel region run
// serially. The exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace pdhjb
