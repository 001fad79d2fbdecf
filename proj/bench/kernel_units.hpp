// kernel_units.hpp
// Generated kernel units, each included into a namespace that supplies the
// names its opaque text uses. Variants that differ only in a helper (select
// or hash) get one namespace per helper.

#ifndef COIL_BENCH_KERNEL_UNITS_HPP
#define COIL_BENCH_KERNEL_UNITS_HPP

#include <cstddef>
#include <cstdint>
#include <type_traits>

#include "coil/kernels/bst.hpp"
#include "coil/kernels/hash.hpp"
#include "coil/kernels/hashtable.hpp"
#include "coil/kernels/skiplist.hpp"
#include "coil/runtime/prefetch.hpp"
#include "coil/runtime/select.hpp"

namespace coil::units {

namespace env {
using kernels::BstNode;
using kernels::ChainNode;
using kernels::KeyType;
using kernels::SkipNode;
using kernels::Slot;
using runtime::prefetch;
} // namespace env

namespace bs_arith {
using namespace env;
constexpr std::size_t select_index(bool c, std::size_t a, std::size_t b)
{
    return runtime::select_arith(c, a, b);
}
#include "BinarySearch_lower_bound.gen.hpp"
} // namespace bs_arith

namespace bs_ternary {
using namespace env;
constexpr std::size_t select_index(bool c, std::size_t a, std::size_t b)
{
    return runtime::select_ternary(c, a, b);
}
#include "BinarySearch_lower_bound.gen.hpp"
} // namespace bs_ternary

namespace bt {
using namespace env;
#include "BST_find.gen.hpp"
} // namespace bt

namespace sl {
using namespace env;
#include "SkipList_find.gen.hpp"
} // namespace sl

namespace sli {
using namespace env;
#include "SkipList_next_limit.gen.hpp"
} // namespace sli

namespace ht_fmix {
using namespace env;
constexpr std::uint64_t hash_key(KeyType k) { return kernels::fmix64(k); }
#include "HashTable_find.gen.hpp"
} // namespace ht_fmix

namespace ht_identity {
using namespace env;
constexpr std::uint64_t hash_key(KeyType k) { return k; }
#include "HashTable_find.gen.hpp"
} // namespace ht_identity

namespace cht_fmix {
using namespace env;
constexpr std::uint64_t hash_key(KeyType k) { return kernels::fmix64(k); }
#include "ChainedHash_find.gen.hpp"
} // namespace cht_fmix

namespace cht_identity {
using namespace env;
constexpr std::uint64_t hash_key(KeyType k) { return k; }
#include "ChainedHash_find.gen.hpp"
} // namespace cht_identity

} // namespace coil::units

#endif // COIL_BENCH_KERNEL_UNITS_HPP
