#pragma once

#include <functional>

namespace reflectdepth {

// Number of worker threads; honors the REFLECTDEPTH_THREADS env var.
int thread_count();

// Runs fn(row) for row in [0, rows). Rows are distributed over threads in
// contiguous blocks; fn must not touch state owned by other rows. Reductions
// belong outside: accumulate per row, combine serially, so results do not
// depend on the thread count.
void parallel_rows(int rows, const std::function<void(int)>& fn);

}  // namespace reflectdepth
