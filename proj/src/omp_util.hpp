#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace jle {

// workers <= 0 means the library default thread count.
inline int effective_workers(int workers) {
#ifdef _OPENMP
  return workers > 0 ? workers : omp_get_max_threads();
#else
  (void)workers;
  return 1;
#endif
}

}  // namespace jle
