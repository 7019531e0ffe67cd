#pragma once

// Batch execution of independent work items.
//
// Each work item i is a pure function of i (it derives its own RNG stream
// from (seed, i)), so the parallel kernel and the serial reference produce
// the same vector element by element. Reductions then run over that vector in
// index order, which makes every downstream sum bit-identical for any worker
// count.

#include <cstddef>
#include <exception>
#include <mutex>
#include <type_traits>
#include <vector>

#include <omp.h>

namespace sl2flow {

/// Serial reference: out[i] = fn(i) for i in [0, n).
template <class Fn>
auto map_serial(std::size_t n, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  std::vector<std::invoke_result_t<Fn&, std::size_t>> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
  return out;
}

/// OpenMP kernel with the same contract as map_serial. The first exception
/// thrown by any work item is rethrown after the parallel region.
template <class Fn>
auto map_parallel(std::size_t n, int workers, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  if (workers <= 1) return map_serial(n, fn);
  std::vector<std::invoke_result_t<Fn&, std::size_t>> out(n);
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 64) num_threads(workers)
  for (long long i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

/// Worker count used when the caller passes 0.
inline int default_workers() { return omp_get_max_threads(); }

}  // namespace sl2flow
