#include "mhd/parallel.hpp"

#include <omp.h>

#include <atomic>
#include <cstdlib>
#include <string>

namespace mhd {

namespace {

int default_limit() {
  if (const char* env = std::getenv("MHD_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return omp_get_max_threads();
}

std::atomic<int> g_limit{0};

}  // namespace

void set_thread_limit(int n) { g_limit = n > 0 ? n : 0; }

int thread_limit() {
  const int n = g_limit.load();
  return n > 0 ? n : default_limit();
}

}  // namespace mhd
