// hashtable.hpp
// Open addressing with linear probing (key 0 marks an empty slot), and a
// chained table for the hybrid schedule.

#ifndef COIL_KERNELS_HASHTABLE_HPP
#define COIL_KERNELS_HASHTABLE_HPP

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "coil/kernels/dataset.hpp"
#include "coil/kernels/hash.hpp"

namespace coil::kernels {

struct Slot
{
    KeyType key;
    std::uint64_t value;
};

inline std::uint64_t hash_of(HashKind kind, KeyType k)
{
    return kind == HashKind::Fmix ? fmix64(k) : k;
}

inline std::uint64_t value_for(KeyType k) { return fmix64(k ^ 0x9e3779b97f4a7c15ull); }

struct HashTable
{
    std::vector<Slot> slots; // power-of-two size
    std::uint64_t mask = 0;
    HashKind hash = HashKind::Fmix;

    void insert(KeyType k, std::uint64_t v)
    {
        if (k == 0)
            throw std::invalid_argument("key 0 is reserved for empty slots");
        std::uint64_t h = hash_of(hash, k) & mask;
        while (slots[h].key != 0 && slots[h].key != k)
            h = (h + 1) & mask;
        slots[h] = {k, v};
    }
};

// At most half full.
inline HashTable build_hashtable(const std::vector<KeyType>& keys, HashKind hash)
{
    HashTable t;
    t.hash = hash;
    std::size_t size = std::bit_ceil(std::max<std::size_t>(2, 2 * keys.size()));
    t.slots.assign(size, Slot{0, 0});
    t.mask = size - 1;
    for (KeyType k : keys)
        t.insert(k, value_for(k));
    return t;
}

inline const Slot* hashtable_find(const HashTable& t, KeyType k)
{
    std::uint64_t h = hash_of(t.hash, k) & t.mask;
    while (t.slots[h].key != k && t.slots[h].key != 0)
        h = (h + 1) & t.mask;
    return &t.slots[h];
}

struct ChainNode
{
    KeyType key;
    std::uint64_t value;
    const ChainNode* next;
};

struct ChainedTable
{
    std::vector<ChainNode> nodes;
    std::vector<const ChainNode*> buckets; // power-of-two count
    std::uint64_t mask = 0;
    HashKind hash = HashKind::Fmix;
};

// One bucket per key on average; chain nodes at shuffled positions.
inline ChainedTable build_chained(const std::vector<KeyType>& keys, HashKind hash,
                                  std::uint64_t seed)
{
    Rng rng(seed);
    ChainedTable t;
    t.hash = hash;
    std::size_t size = std::bit_ceil(std::max<std::size_t>(1, keys.size()));
    t.buckets.assign(size, nullptr);
    t.mask = size - 1;
    t.nodes.resize(keys.size());
    auto pos = scattered_positions(keys.size(), rng);
    for (std::size_t i = 0; i < keys.size(); ++i) {
        ChainNode& node = t.nodes[pos[i]];
        auto& head = t.buckets[hash_of(hash, keys[i]) & t.mask];
        node = {keys[i], value_for(keys[i]), head};
        head = &node;
    }
    return t;
}

inline const ChainNode* chained_find(const ChainedTable& t, KeyType k)
{
    for (const ChainNode* n = t.buckets[hash_of(t.hash, k) & t.mask]; n; n = n->next)
        if (n->key == k)
            return n;
    return nullptr;
}

} // namespace coil::kernels

#endif // COIL_KERNELS_HASHTABLE_HPP
