#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace ballistica {

// Worker count: hardware concurrency capped by the BALLISTICA_THREADS
// environment variable (>= 1).
int worker_count();

// Runs fn(i) for i in [0, n). Work items must write to disjoint, preassigned
// slots so the result is independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Deterministic fixed-tree reduction: sums values in pairwise order, which is
// independent of thread count and more accurate than a running sum.
double pairwise_sum(const double* data, std::size_t n);
double pairwise_sum(const std::vector<double>& v);

}  // namespace ballistica
