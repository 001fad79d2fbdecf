// skiplist.hpp
// Static skip list: a head of full height, node heights geometric with
// p = 1/2, and a +inf sentinel that ends every level and links to itself.

#ifndef COIL_KERNELS_SKIPLIST_HPP
#define COIL_KERNELS_SKIPLIST_HPP

#include <cstddef>
#include <limits>
#include <vector>

#include "coil/kernels/dataset.hpp"

namespace coil::kernels {

inline constexpr int kSkipHeight = 16;
inline constexpr KeyType kSkipSentinel = std::numeric_limits<KeyType>::max();

struct SkipNode
{
    KeyType key;
    int height;
    const SkipNode* skip[kSkipHeight]; // skip[0] is the next node
};

struct SkipList
{
    std::vector<SkipNode> nodes; // [0] head, [1] sentinel, then the keys
    std::vector<const SkipNode*> by_rank; // key order, sentinel excluded

    const SkipNode* head() const { return &nodes[0]; }
    const SkipNode* sentinel() const { return &nodes[1]; }
};

inline SkipList build_skiplist(const std::vector<KeyType>& sorted_keys, std::uint64_t seed)
{
    Rng rng(seed);
    const std::size_t n = sorted_keys.size();
    SkipList s;
    s.nodes.assign(n + 2, SkipNode{0, 0, {}});
    auto pos = scattered_positions(n, rng);

    SkipNode* head = &s.nodes[0];
    SkipNode* sentinel = &s.nodes[1];
    head->key = 0;
    head->height = kSkipHeight;
    sentinel->key = kSkipSentinel;
    sentinel->height = kSkipHeight;
    for (auto& link : sentinel->skip)
        link = sentinel;

    SkipNode* last[kSkipHeight];
    for (auto& l : last)
        l = head;
    s.by_rank.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        SkipNode* node = &s.nodes[2 + pos[i]];
        int h = 1;
        while (h < kSkipHeight && (rng.next() & 1))
            ++h;
        node->key = sorted_keys[i];
        node->height = h;
        for (int l = 0; l < h; ++l) {
            last[l]->skip[l] = node;
            last[l] = node;
        }
        s.by_rank.push_back(node);
    }
    for (int l = 0; l < kSkipHeight; ++l)
        last[l]->skip[l] = sentinel;
    return s;
}

// Down-then-right search starting from `pred`, usually the head.
inline const SkipNode* skiplist_find(const SkipNode* pred, KeyType k)
{
    int ht = pred->height;
    const SkipNode* n = nullptr;
    for (;;) {
        while (ht > 0) {
            n = pred->skip[ht - 1];
            if (!(k < n->key))
                break;
            --ht;
        }
        if (ht == 0)
            return nullptr;
        --ht;
        while (k > n->key) {
            pred = n;
            n = n->skip[ht];
        }
        if (!(k < n->key))
            return n;
    }
}

inline KeyType skiplist_advance(const SkipNode* n, std::size_t limit)
{
    while (limit--)
        n = n->skip[0];
    return n->key;
}

} // namespace coil::kernels

#endif // COIL_KERNELS_SKIPLIST_HPP
