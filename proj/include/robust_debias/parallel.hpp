#pragma once

#include <cstddef>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace robust_debias {

// Resolve a thread-count request: 0 means "auto" (all hardware threads,
// or the ROBUST_DEBIAS_THREADS environment variable when set).
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ROBUST_DEBIAS_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Serial reference loop. Kernels in this project are data-parallel over
// independent work items that write to disjoint slots; running them through
// serial_for must produce bit-identical results to parallel_for.
template <class F>
void serial_for(std::size_t n, F&& body) {
  for (std::size_t i = 0; i < n; ++i) body(i);
}

// OpenMP loop over [0, n). threads <= 1 falls back to the serial reference.
template <class F>
void parallel_for(std::size_t n, int threads, F&& body) {
  threads = resolve_threads(threads);
  if (threads <= 1 || n <= 1) {
    serial_for(n, body);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    body(static_cast<std::size_t>(i));
  }
#else
  serial_for(n, body);
#endif
}

// Deterministic pairwise sum in fixed index order; used to aggregate
// per-item results so totals do not depend on the thread schedule.
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(std::span<const double>(v.data(), v.size()));
}

}  // namespace robust_debias
