// select.hpp
// Two-way selection without a control dependence.

#ifndef COIL_RUNTIME_SELECT_HPP
#define COIL_RUNTIME_SELECT_HPP

#include <concepts>
#include <type_traits>

namespace coil::runtime {

// c ? a : b through a mask. Both arms are already evaluated as arguments.
template <std::integral T>
constexpr T select_arith(bool c, T a, T b) noexcept
{
    using U = std::make_unsigned_t<T>;
    U mask = U(0) - static_cast<U>(c);
    return static_cast<T>(static_cast<U>(b) ^ ((static_cast<U>(a) ^ static_cast<U>(b)) & mask));
}

// Left to the compiler, which may emit a branch or a conditional move.
template <typename T>
constexpr T select_ternary(bool c, T a, T b) noexcept
{
    return c ? a : b;
}

enum class SelectKind { Arith, Ternary };

} // namespace coil::runtime

#endif // COIL_RUNTIME_SELECT_HPP
