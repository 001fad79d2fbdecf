// dataset.hpp
// Reproducible datasets. Everything derives from std::mt19937_64 raw output
// (fully specified by the standard), so a seed pins the bytes on every
// platform; library distributions are avoided for that reason.
//
//   index keys   strictly ascending, even, >= 2, gaps uniform in {2,4,6,8}
//   miss keys    odd, so never present
//   queries      hit with probability hit_rate, else a miss key in range

#ifndef COIL_KERNELS_DATASET_HPP
#define COIL_KERNELS_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace coil::kernels {

using KeyType = std::uint64_t;

class Rng
{
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    // Uniform in [0, bound) by rejection; bound > 0.
    std::uint64_t below(std::uint64_t bound)
    {
        std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % bound;
    }

    bool chance(double p)
    {
        // 53 random bits, as a double in [0, 1).
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53 < p;
    }

    template <typename T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 eng_;
};

inline std::vector<KeyType> make_keys(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<KeyType> keys(n);
    KeyType k = 0;
    for (auto& key : keys) {
        k += 2 * (1 + rng.below(4));
        key = k;
    }
    return keys;
}

inline KeyType miss_key(const std::vector<KeyType>& keys, Rng& rng)
{
    KeyType top = keys.empty() ? 2 : keys.back() + 2;
    return 2 * rng.below(top / 2) + 1;
}

inline std::vector<KeyType> make_queries(const std::vector<KeyType>& keys, std::size_t count,
                                         double hit_rate, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<KeyType> out(count);
    for (auto& q : out)
        q = (!keys.empty() && rng.chance(hit_rate)) ? keys[rng.below(keys.size())]
                                                    : miss_key(keys, rng);
    return out;
}

// Identity permutation of [0, n), shuffled; used to scatter node storage.
inline std::vector<std::size_t> scattered_positions(std::size_t n, Rng& rng)
{
    std::vector<std::size_t> pos(n);
    for (std::size_t i = 0; i < n; ++i)
        pos[i] = i;
    rng.shuffle(pos);
    return pos;
}

} // namespace coil::kernels

#endif // COIL_KERNELS_DATASET_HPP
