#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>

namespace fpl {

using cplx = std::complex<double>;

// Worker count used by every range-parallel kernel. Defaults to the hardware
// concurrency; results never depend on it (reductions are ordered by task index).
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs task(i) for i in [0, n_tasks) on up to thread_count() workers.
// The first exception thrown by any task is rethrown on the calling thread.
void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& task);

// Fixed-shape pairwise reduction: the tree depends only on the input length.
double pairwise_sum(std::span<const double> values);
cplx pairwise_sum(std::span<const cplx> values);

}  // namespace fpl
