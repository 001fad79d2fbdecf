// defs.hpp
// The kernel coroutines as DSL definitions. Opaque text assumes these names
// are visible where the generated code is included:
//
//   KeyType, BstNode, SkipNode, Slot, ChainNode   (kernels/*.hpp)
//   prefetch(const void*)
//   select_index(bool, std::size_t, std::size_t)   bs only
//   hash_key(KeyType)                              ht and cht only

#ifndef COIL_KERNELS_DEFS_HPP
#define COIL_KERNELS_DEFS_HPP

#include <string>
#include <string_view>
#include <vector>

#include "coil/dsl.hpp"

namespace coil::kernels {

using dsl::CoroutineDef;
using dsl::Hint;

// Branch-free lower bound with a data-independent trip count: ceil(log2 len)
// probes, each prefetched one stage ahead of its use.
inline CoroutineDef binary_search_def()
{
    using namespace dsl::build;
    auto c = Coroutine("BinarySearch_lower_bound");
    c.Result("std::size_t")
        .SharedArg("const KeyType*", "a")
        .SharedArg("std::size_t", "len")
        .Arg("KeyType", "k")
        .Variable("std::size_t", "base", "0")
        .Variable("std::size_t", "n", "len")
        .Variable("std::size_t", "half");
    c.Body(While("n > 1",
                 Stmt("half = n / 2;"),
                 Prefetch("&a[base + half]"), Yield(),
                 Stmt("base = select_index(a[base + half] < k, base + half, base);"),
                 Stmt("n -= half;")),
           Return("base + static_cast<std::size_t>(n == 1 && a[base] < k)"));
    return c;
}

inline CoroutineDef bst_find_def()
{
    using namespace dsl::build;
    auto c = Coroutine("BST_find");
    c.Result("const BstNode*").Arg("const BstNode*", "n").Arg("KeyType", "key");
    c.Body(While("n",
                 Prefetch("n"), Yield(),
                 If("n->key == key", Then(Return("n"))),
                 Stmt("n = n->child[n->key < key];")),
           Return("n"));
    return c;
}

inline CoroutineDef skiplist_find_def()
{
    using namespace dsl::build;
    auto c = Coroutine("SkipList_find");
    c.Result("const SkipNode*")
        .Arg("const SkipNode*", "pred")
        .Arg("KeyType", "k")
        .Variable("const SkipNode*", "n", "{}")
        .Variable("int", "ht", "pred->height");
    c.Body(While("true",
                 While("ht > 0",
                       Stmt("n = pred->skip[ht - 1];"),
                       Prefetch("n"), Yield(),
                       If("!(k < n->key)", Then(Break())),
                       Stmt("--ht;")),
                 If("ht == 0", Then(Return("nullptr"))),
                 Stmt("--ht;"),
                 While("k > n->key",
                       Stmt("pred = n; n = n->skip[ht];"),
                       Prefetch("n"), Yield()),
                 If("!(k < n->key)", Then(Return("n")))));
    return c;
}

// Key of the node `limit` hops forward on level 0; the sentinel loops to
// itself so short lists end there.
inline CoroutineDef skiplist_next_limit_def()
{
    using namespace dsl::build;
    auto c = Coroutine("SkipList_next_limit");
    c.Result("KeyType").Arg("const SkipNode*", "n").Arg("std::size_t", "limit");
    c.Body(While("limit--",
                 Prefetch("n"), Yield(),
                 Stmt("n = n->skip[0];")),
           Prefetch("n"), Yield(),
           Return("n->key"));
    return c;
}

inline CoroutineDef hashtable_find_def()
{
    using namespace dsl::build;
    auto c = Coroutine("HashTable_find");
    c.Result("const Slot*")
        .SharedArg("const Slot*", "ht")
        .SharedArg("std::uint64_t", "mask")
        .Arg("KeyType", "k")
        .Variable("std::uint64_t", "hash");
    c.Body(Stmt("hash = hash_key(k);"),
           Stmt("hash &= mask;"),
           Yield(Hint::StaticStage),
           Prefetch("&ht[hash]"),
           Yield(Hint::StaticStage),
           Stmt("while (ht[hash].key != k &&\n"
                "       ht[hash].key != 0) {\n"
                "    hash++;\n"
                "    if (hash == mask + 1) hash = 0;\n"
                "}"),
           Return("&ht[hash]"));
    return c;
}

// Chained table: hashing and the bucket prefetch are uniform across
// lookups, the chain walk is not.
inline CoroutineDef chained_find_def()
{
    using namespace dsl::build;
    auto c = Coroutine("ChainedHash_find");
    c.Result("const ChainNode*")
        .SharedArg("const ChainNode* const*", "buckets")
        .SharedArg("std::uint64_t", "mask")
        .Arg("KeyType", "k")
        .Variable("std::uint64_t", "hash")
        .Variable("const ChainNode*", "n", "nullptr");
    c.Body(Stmt("hash = hash_key(k) & mask;"),
           Yield(Hint::StaticStage),
           Prefetch("&buckets[hash]"),
           Yield(Hint::StaticStage),
           Assign("n", "buckets[hash]"),
           While("n",
                 Prefetch("n"), Yield(Hint::DynamicStage),
                 If("n->key == k", Then(Return("n"))),
                 Stmt("n = n->next;")),
           Return("nullptr"));
    return c;
}

struct KernelDef
{
    std::string_view key;
    std::string_view summary;
    CoroutineDef (*make)();
};

inline const std::vector<KernelDef>& kernel_defs()
{
    static const std::vector<KernelDef> defs = {
        {"bs", "branch-free binary search (lower bound)", &binary_search_def},
        {"bt", "binary search tree lookup", &bst_find_def},
        {"sl", "skip list lookup", &skiplist_find_def},
        {"sli", "skip list iteration by a hop limit", &skiplist_next_limit_def},
        {"ht", "linear-probing hash table lookup", &hashtable_find_def},
        {"cht", "chained hash table lookup", &chained_find_def},
    };
    return defs;
}

// Accepts a registry key (`ht`) or a coroutine name (`HashTable_find`).
inline const KernelDef* find_kernel_def(std::string_view name)
{
    for (const auto& d : kernel_defs())
        if (d.key == name || d.make().name() == name)
            return &d;
    return nullptr;
}

} // namespace coil::kernels

#endif // COIL_KERNELS_DEFS_HPP
