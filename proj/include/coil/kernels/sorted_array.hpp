// sorted_array.hpp

#ifndef COIL_KERNELS_SORTED_ARRAY_HPP
#define COIL_KERNELS_SORTED_ARRAY_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "coil/kernels/dataset.hpp"
#include "coil/runtime/select.hpp"

namespace coil::kernels {

struct SortedArray
{
    std::vector<KeyType> keys; // strictly ascending
};

// Smallest i with a[i] >= k, or a.size(). Fixed trip count of
// ceil(log2 a.size()) halvings; the probe choice is a select, not a branch.
inline std::size_t binary_search(std::span<const KeyType> a, KeyType k)
{
    std::size_t base = 0;
    std::size_t n = a.size();
    while (n > 1) {
        std::size_t half = n / 2;
        base = runtime::select_arith(a[base + half] < k, base + half, base);
        n -= half;
    }
    return base + static_cast<std::size_t>(n == 1 && a[base] < k);
}

} // namespace coil::kernels

#endif // COIL_KERNELS_SORTED_ARRAY_HPP
