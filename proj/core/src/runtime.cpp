#include "fddm/runtime.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace fddm {

void retain_heap_memory() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
}

}  // namespace fddm
