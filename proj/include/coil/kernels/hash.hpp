// hash.hpp
// Murmur3 finalizers and home-slot computation.

#ifndef COIL_KERNELS_HASH_HPP
#define COIL_KERNELS_HASH_HPP

#include <cstdint>

namespace coil::kernels {

constexpr std::uint32_t fmix32(std::uint32_t h)
{
    h ^= h >> 16;
    h *= 0x85ebca6bu;
    h ^= h >> 13;
    h *= 0xc2b2ae35u;
    h ^= h >> 16;
    return h;
}

constexpr std::uint64_t fmix64(std::uint64_t k)
{
    k ^= k >> 33;
    k *= 0xff51afd7ed558ccdull;
    k ^= k >> 33;
    k *= 0xc4ceb9fe1a85ec53ull;
    k ^= k >> 33;
    return k;
}

// mask = size - 1 for a power-of-two size.
constexpr std::uint64_t hash_home(std::uint64_t key, std::uint64_t mask)
{
    return fmix64(key) & mask;
}

enum class HashKind { Fmix, Identity };

} // namespace coil::kernels

#endif // COIL_KERNELS_HASH_HPP
