#include "irrig/kernels/parallel.hpp"

#include <omp.h>

namespace irrig::kernels {

int thread_count() { return omp_get_max_threads(); }

}  // namespace irrig::kernels
