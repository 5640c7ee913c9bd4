// SPDX-License-Identifier: Apache-2.0
//
// Training allocates and frees the same large activation buffers for every
// bag. glibc's default thresholds hand those back to the kernel each time,
// so every bag pays for fresh page faults. Keeping them on the heap roughly
// halves wall time.
#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace ainet {

inline void keep_heap_pages() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 64 << 20);
#endif
}

}  // namespace ainet
