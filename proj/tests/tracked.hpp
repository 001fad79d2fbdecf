// tracked.hpp
// Generated BST and hash-table units over node types whose fields log each
// read, with a prefetch that logs its address.

#ifndef COIL_TESTS_TRACKED_HPP
#define COIL_TESTS_TRACKED_HPP

#include <algorithm>
#include <cstdint>
#include <vector>

#include "coil/kernels/bst.hpp"
#include "coil/kernels/hash.hpp"

namespace tracked {

using KeyType = std::uint64_t;

struct Event
{
    enum Kind { Prefetch, Read, Mark } kind;
    const void* addr;
    long task;

    bool operator==(const Event&) const = default;
};

inline std::vector<Event> g_log;
inline long g_task = -1;

inline void prefetch(const void* p) { g_log.push_back({Event::Prefetch, p, g_task}); }

template <typename T>
struct Field
{
    const void* owner = nullptr;
    T v{};

    operator T() const
    {
        g_log.push_back({Event::Read, owner, g_task});
        return v;
    }
};

struct BstNode
{
    Field<KeyType> key;
    Field<const BstNode*> child[2];
};

struct Slot
{
    Field<KeyType> key;
    std::uint64_t value;
};

inline std::uint64_t hash_key(KeyType k) { return coil::kernels::fmix64(k); }

#include "BST_find.gen.hpp"
#include "HashTable_find.gen.hpp"

struct Tree
{
    std::vector<BstNode> nodes;
    const BstNode* root = nullptr;
};

// Same shape and node order as t.
inline Tree mirror(const coil::kernels::Bst& t)
{
    Tree out;
    out.nodes.resize(t.nodes.size());
    auto map = [&](const coil::kernels::BstNode* n) -> const BstNode* {
        return n ? &out.nodes[static_cast<std::size_t>(n - t.nodes.data())] : nullptr;
    };
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        auto& m = out.nodes[i];
        m.key = {&m, t.nodes[i].key};
        m.child[0] = {&m, map(t.nodes[i].child[0])};
        m.child[1] = {&m, map(t.nodes[i].child[1])};
    }
    out.root = map(t.root);
    return out;
}

// Linear-probing table of `size` slots (a power of two) holding keys.
inline std::vector<Slot> make_table(const std::vector<KeyType>& keys, std::size_t size)
{
    std::vector<Slot> slots(size);
    for (auto& s : slots)
        s.key.owner = &s;
    std::uint64_t mask = size - 1;
    for (auto k : keys) {
        auto h = hash_key(k) & mask;
        while (slots[h].key.v != 0)
            h = (h + 1) & mask;
        slots[h].key.v = k;
    }
    return slots;
}

inline std::vector<Event> without(std::vector<Event> log, Event::Kind k)
{
    log.erase(std::remove_if(log.begin(), log.end(), [k](const Event& e) { return e.kind == k; }),
              log.end());
    return log;
}

} // namespace tracked

#endif // COIL_TESTS_TRACKED_HPP
