#pragma once

// Execution policy shared by the data-parallel kernels. Every kernel keeps a
// plain serial reference path; the OpenMP path partitions the outermost loop
// and reduces partial sums pairwise in index order, so its result does not
// depend on the thread count.

#include <cstddef>
#include <span>
#include <vector>

namespace ngeo {

enum class Execution { Serial, Parallel };

/// Pairwise (cascade) summation in fixed index order.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

/// Runs body(i) for i in [0, n). The parallel branch uses a static schedule.
template <class Body>
void for_each_index(Execution exec, int n, Body&& body) {
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) body(i);
  } else {
    for (int i = 0; i < n; ++i) body(i);
  }
}

int hardware_threads();

}  // namespace ngeo
