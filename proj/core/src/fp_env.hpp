#pragma once

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

namespace c2f::detail {

/// Flush-to-zero and denormals-are-zero for the lifetime of the guard.
class DenormalGuard {
 public:
#if defined(__SSE__)
  DenormalGuard() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
  ~DenormalGuard() { _mm_setcsr(saved_); }
  DenormalGuard(const DenormalGuard&) = delete;
  DenormalGuard& operator=(const DenormalGuard&) = delete;

 private:
  unsigned saved_;
#endif
};

}  // namespace c2f::detail
