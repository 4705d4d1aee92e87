#ifndef RIS_ALLOCATOR_HPP_
#define RIS_ALLOCATOR_HPP_

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace ris {

// Keeps large, short-lived batch matrices on the heap instead of mapping and
// unmapping them on every update. No-op outside glibc.
inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
}

}  // namespace ris

#endif  // RIS_ALLOCATOR_HPP_
