// bst.hpp
// Unbalanced binary search tree with the shape of random-order insertion.

#ifndef COIL_KERNELS_BST_HPP
#define COIL_KERNELS_BST_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "coil/kernels/dataset.hpp"

namespace coil::kernels {

struct BstNode
{
    KeyType key;
    const BstNode* child[2]; // child[1] holds the larger keys
};

struct Bst
{
    std::vector<BstNode> nodes;
    const BstNode* root = nullptr;
};

// Picking each subtree root uniformly from its key range gives the same
// shape distribution as inserting the keys in shuffled order, in O(n).
// Nodes sit at shuffled positions so tree neighbours are not memory
// neighbours.
inline Bst build_bst(const std::vector<KeyType>& sorted_keys, std::uint64_t seed)
{
    Rng rng(seed);
    Bst t;
    const std::size_t n = sorted_keys.size();
    t.nodes.assign(n, BstNode{0, {nullptr, nullptr}});
    if (n == 0)
        return t;
    auto pos = scattered_positions(n, rng);
    std::size_t used = 0;

    struct Range
    {
        std::size_t lo, hi;
        const BstNode** link;
    };
    std::vector<Range> todo{{0, n, &t.root}};
    while (!todo.empty()) {
        auto [lo, hi, link] = todo.back();
        todo.pop_back();
        if (lo == hi) {
            *link = nullptr;
            continue;
        }
        std::size_t mid = lo + rng.below(hi - lo);
        BstNode& node = t.nodes[pos[used++]];
        node.key = sorted_keys[mid];
        *link = &node;
        todo.push_back({mid + 1, hi, &node.child[1]});
        todo.push_back({lo, mid, &node.child[0]});
    }
    return t;
}

inline const BstNode* bst_find(const BstNode* n, KeyType key)
{
    while (n) {
        if (n->key == key)
            return n;
        n = n->child[n->key < key];
    }
    return nullptr;
}

} // namespace coil::kernels

#endif // COIL_KERNELS_BST_HPP
