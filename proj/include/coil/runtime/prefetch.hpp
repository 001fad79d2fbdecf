// prefetch.hpp
// Non-binding cache prefetch toward L1.

#ifndef COIL_RUNTIME_PREFETCH_HPP
#define COIL_RUNTIME_PREFETCH_HPP

#if defined(_MSC_VER) && !defined(__clang__)
#include <xmmintrin.h>
#endif

namespace coil::runtime {

inline void prefetch(const void* p) noexcept
{
#if defined(COIL_PREFETCH_TOUCH)
    // Targets without a hint instruction: a discarded volatile read.
    static_cast<void>(*static_cast<const volatile char*>(p));
#elif defined(__GNUC__) || defined(__clang__)
    __builtin_prefetch(p, 0, 3);
#elif defined(_MSC_VER)
    _mm_prefetch(static_cast<const char*>(p), _MM_HINT_T0);
#else
#pragma message("coil: no prefetch instruction for this target; prefetch is a no-op")
    static_cast<void>(p);
#endif
}

} // namespace coil::runtime

#endif // COIL_RUNTIME_PREFETCH_HPP
