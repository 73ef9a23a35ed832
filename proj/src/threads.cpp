#include "gapkit/threads.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

namespace gapkit {

int configure_threads() {
  if (const char* env = std::getenv("GAPKIT_THREADS"); env != nullptr && *env != '\0') {
    try {
      const int n = std::stoi(env);
      if (n > 0) omp_set_num_threads(n);
    } catch (const std::exception&) {
      // ignore garbage; OpenMP defaults apply
    }
  }
  return omp_get_max_threads();
}

}  // namespace gapkit
