#include "alcgan/nn/runtime.hpp"

#include <cstdlib> // defines __GLIBC__ where applicable
#include <limits>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace alcgan::nn {

void configure_allocator() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, std::numeric_limits<int>::max());
    mallopt(M_TRIM_THRESHOLD, std::numeric_limits<int>::max());
#endif
}

} // namespace alcgan::nn
