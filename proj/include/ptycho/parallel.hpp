#pragma once

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ptycho/field.hpp"

namespace ptycho {

/// Worker count: PTYCHO_THREADS if set and positive, otherwise the runtime default.
inline int thread_count() {
  int limit = 0;
  if (const char* env = std::getenv("PTYCHO_THREADS")) {
    try {
      limit = std::stoi(env);
    } catch (...) {
      limit = 0;
    }
  }
#ifdef _OPENMP
  const int available = omp_get_max_threads();
  return limit > 0 && limit < available ? limit : available;
#else
  (void)limit;
  return 1;
#endif
}

/// Runs body(i) for i in [0, count). Each index must write only its own slot;
/// any reduction over the results is done afterwards in index order.
template <typename Body>
void parallel_for(Index count, Body&& body) {
#ifdef _OPENMP
  const int threads = thread_count();
  if (threads > 1 && count > 1) {
#pragma omp parallel for schedule(static) num_threads(threads)
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
#endif
  for (Index i = 0; i < count; ++i) body(i);
}

}  // namespace ptycho
