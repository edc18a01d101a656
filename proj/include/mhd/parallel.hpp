#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace mhd {

/// Caps the worker count used by every parallel kernel. n <= 0 restores the
/// default (MHD_THREADS if set, else the OpenMP default).
void set_thread_limit(int n);
int thread_limit();

/// Runs body(i) for i in [0, n). Exceptions thrown by any iteration are
/// rethrown on the calling thread (the first one wins). Runs serially when
/// `parallel` is false or when called from inside another parallel region.
template <typename Body>
void parallel_for(std::ptrdiff_t n, Body&& body, bool parallel = true) {
  std::exception_ptr error;
  std::mutex guard;
  const int threads = parallel ? thread_limit() : 1;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (threads > 1 && n > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard lock(guard);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace mhd
