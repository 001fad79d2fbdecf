// bench.hpp
// Benchmark harness: builds a kernel's index and query stream, runs the
// baseline routine or the generated coroutines under a scheduler on one or
// more threads, and reports throughput with an order-independent checksum.

#ifndef COIL_BENCH_BENCH_HPP
#define COIL_BENCH_BENCH_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#include <unistd.h>
#endif

#include <json.hpp>

#include "coil/kernels/bst.hpp"
#include "coil/kernels/dataset.hpp"
#include "coil/kernels/hash.hpp"
#include "coil/kernels/hashtable.hpp"
#include "coil/kernels/skiplist.hpp"
#include "coil/kernels/sorted_array.hpp"
#include "coil/runtime/scheduler.hpp"
#include "kernel_units.hpp"

namespace coil::bench {

using kernels::KeyType;
using runtime::ConfigError;
using runtime::Policy;

enum class Variant { Baseline, Coro };
enum class Format { Csv, Json };

inline std::string to_string(Variant v) { return v == Variant::Baseline ? "baseline" : "coro"; }

inline constexpr std::array<int, 10> kBatchWidths = {1, 2, 4, 8, 16, 32, 48, 64, 96, 128};
inline constexpr std::array<std::string_view, 6> kKernels = {"bs", "bt", "sl", "sli", "ht", "cht"};

struct BenchConfig
{
    std::string kernel = "ht";
    Variant variant = Variant::Coro;
    runtime::SchedulerConfig sched{};
    std::uint64_t dataset_bytes = std::uint64_t{1} << 30;
    std::uint64_t queries = 10'000'000;
    int threads = 1;
    std::uint64_t seed = 1;
    std::size_t iter_limit = 1000;
    double hit_rate = 1.0;
    Format format = Format::Csv;
    runtime::SelectKind select = runtime::SelectKind::Arith;
    kernels::HashKind hash = kernels::HashKind::Fmix;
    bool pin = true;
    bool verbose = false;

    bool batched() const
    {
        return variant == Variant::Coro &&
               (sched.policy == Policy::StaticBatch || sched.policy == Policy::Hybrid);
    }

    void check() const
    {
        if (std::find(kKernels.begin(), kKernels.end(), kernel) == kKernels.end())
            throw ConfigError("unknown kernel '" + kernel + "'");
        sched.check();
        if (threads < 1)
            throw ConfigError("threads must be at least 1");
        if (dataset_bytes == 0)
            throw ConfigError("dataset size must be positive");
        if (!(hit_rate >= 0.0 && hit_rate <= 1.0))
            throw ConfigError("hit rate must be within [0, 1]");
        if (batched() && std::find(kBatchWidths.begin(), kBatchWidths.end(), sched.width) ==
                             kBatchWidths.end())
            throw ConfigError("batched schedules are compiled for widths 1 2 4 8 16 32 48 64 "
                              "96 128, not " + std::to_string(sched.width));
        if (variant == Variant::Coro && sched.policy == Policy::StaticBatch && kernel != "ht")
            throw ConfigError("kernel " + kernel +
                              " branches across suspension points; the static schedule needs a "
                              "straight-line state machine (try --sched hybrid or dynamic)");
    }
};

struct BenchRow
{
    std::string kernel;
    std::string variant;
    std::string policy;
    int width = 0;
    int threads = 0;
    std::uint64_t seed = 0;
    std::uint64_t queries = 0;
    double ops_per_sec = 0;
    std::uint64_t total_ns = 0;
    std::uint64_t checksum = 0;
    std::string scope; // thread<i> or aggregate
};

inline std::uint64_t fold(std::uint64_t sum, std::uint64_t digest)
{
    return sum + kernels::fmix64(digest);
}

// ---- scheduling helpers ---------------------------------------------------

template <typename F>
void with_batch_width(int width, F&& f)
{
    bool hit = false;
    [&]<std::size_t... I>(std::index_sequence<I...>) {
        ((width == kBatchWidths[I] ? (f.template operator()<kBatchWidths[I]>(), hit = true) : false),
         ...);
    }(std::make_index_sequence<kBatchWidths.size()>{});
    if (!hit)
        throw ConfigError("no batched unit compiled for width " + std::to_string(width));
}

// make(C& slot, std::size_t i) initializes slot for query i.
template <typename C, typename R, typename Make>
void run_dynamic(const runtime::SchedulerConfig& s, std::size_t n, Make make, R* out)
{
    if (s.policy == Policy::PushPull) {
        struct Tagged : C
        {
            std::size_t task = 0;
        };
        std::size_t next = 0;
        runtime::run_push_pull<Tagged>(
            s,
            [&](Tagged& c) {
                if (next == n)
                    return false;
                make(static_cast<C&>(c), next);
                c.task = next++;
                return true;
            },
            [&](Tagged& c) {
                out[c.task] = c.Result();
                return true;
            });
        return;
    }
    runtime::run_simplest<C>(s, n, make, [&](C& c, std::size_t i) { out[i] = c.Result(); });
}

// init(B& b, std::size_t first, std::size_t count) calls b.Init.
template <typename B, typename R, typename Init>
void run_batched(const runtime::SchedulerConfig& s, std::size_t n, Init init, R* out)
{
    auto batch = std::make_unique<B>();
    auto store = [&](const B& b, std::size_t first, std::size_t count) {
        R tmp[B::Width];
        b.Fini(tmp);
        std::copy_n(tmp, count, out + first);
    };
    if constexpr (runtime::BatchUnit<B>)
        runtime::run_static_batch(s, *batch, n, init, store);
    else
        runtime::run_hybrid(s, *batch, n, init, store);
}

// ---- workloads ------------------------------------------------------------

class Workload
{
public:
    virtual ~Workload() = default;
    virtual std::size_t queries() const = 0;
    // Runs queries [first, first + count) as thread t; returns the elapsed
    // nanoseconds of the query phase and one digest per query.
    virtual std::uint64_t run(const BenchConfig& cfg, int t, std::size_t first, std::size_t count,
                              std::uint64_t* digests) = 0;
    // Digests from reference implementations that share no code with the
    // generated units.
    virtual void reference(std::size_t first, std::size_t count, std::uint64_t* digests) const = 0;
};

template <typename Impl>
class KernelWorkload final : public Workload
{
public:
    template <typename... A>
    explicit KernelWorkload(A&&... a) : impl_(std::forward<A>(a)...)
    {}

    std::size_t queries() const override { return impl_.queries(); }

    std::uint64_t run(const BenchConfig& cfg, int t, std::size_t first, std::size_t count,
                      std::uint64_t* digests) override
    {
        using R = typename Impl::Result;
        std::vector<R> out(count);
        std::size_t warm = std::min<std::size_t>(count, 1 << 16);
        impl_.exec(cfg, t, first, warm, out.data());
        auto t0 = std::chrono::steady_clock::now();
        impl_.exec(cfg, t, first, count, out.data());
        auto t1 = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < count; ++i)
            digests[i] = impl_.digest(out[i]);
        return static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    }

    void reference(std::size_t first, std::size_t count, std::uint64_t* digests) const override
    {
        for (std::size_t i = 0; i < count; ++i)
            digests[i] = impl_.reference(first + i);
    }

    Impl& impl() { return impl_; }

private:
    Impl impl_;
};

namespace detail {

inline std::uint64_t query_seed(std::uint64_t seed) { return kernels::fmix64(seed ^ 0x51ull); }

inline bool is_member(const std::vector<KeyType>& keys, KeyType k)
{
    return std::binary_search(keys.begin(), keys.end(), k);
}

struct BsImpl
{
    using Result = std::size_t;
    std::vector<KeyType> keys;
    std::vector<KeyType> q;

    BsImpl(const BenchConfig& c, std::size_t n)
        : keys(kernels::make_keys(n, c.seed)),
          q(kernels::make_queries(keys, c.queries, c.hit_rate, query_seed(c.seed)))
    {}

    std::size_t queries() const { return q.size(); }

    template <typename U>
    void exec_with(const BenchConfig& c, std::size_t first, std::size_t count, Result* out)
    {
        const KeyType* qs = q.data() + first;
        const KeyType* a = keys.data();
        std::size_t len = keys.size();
        if (c.variant == Variant::Baseline) {
            for (std::size_t i = 0; i < count; ++i)
                out[i] = U::BinarySearch_lower_bound(a, len, qs[i]);
            return;
        }
        if (c.sched.policy == Policy::Hybrid) {
            with_batch_width(c.sched.width, [&]<int W>() {
                using B = typename U::template Hybrid<W>;
                run_batched<B>(
                    c.sched, count,
                    [&](B& b, std::size_t f, std::size_t n) {
                        KeyType k[W];
                        runtime::load_padded(qs, f, n, W, k);
                        b.Init(typename B::Shared{a, len}, k);
                    },
                    out);
            });
            return;
        }
        using C = typename U::Dynamic;
        typename C::Shared sh{a, len};
        run_dynamic<C>(c.sched, count, [&](C& s, std::size_t i) { s = C(&sh, qs[i]); }, out);
    }

    struct Arith
    {
        using Dynamic = units::bs_arith::CoroutineState_BinarySearch_lower_bound;
        template <int W>
        using Hybrid = units::bs_arith::CoroutineState_BinarySearch_lower_bound_hybrid_8<W>;
        static std::size_t BinarySearch_lower_bound(const KeyType* a, std::size_t len, KeyType k)
        {
            return units::bs_arith::BinarySearch_lower_bound(a, len, k);
        }
    };
    struct Ternary
    {
        using Dynamic = units::bs_ternary::CoroutineState_BinarySearch_lower_bound;
        template <int W>
        using Hybrid = units::bs_ternary::CoroutineState_BinarySearch_lower_bound_hybrid_8<W>;
        static std::size_t BinarySearch_lower_bound(const KeyType* a, std::size_t len, KeyType k)
        {
            return units::bs_ternary::BinarySearch_lower_bound(a, len, k);
        }
    };

    void exec(const BenchConfig& c, int, std::size_t first, std::size_t count, Result* out)
    {
        if (c.select == runtime::SelectKind::Arith)
            exec_with<Arith>(c, first, count, out);
        else
            exec_with<Ternary>(c, first, count, out);
    }

    std::uint64_t digest(Result r) const { return r; }
    std::uint64_t reference(std::size_t i) const
    {
        return static_cast<std::uint64_t>(std::lower_bound(keys.begin(), keys.end(), q[i]) -
                                          keys.begin());
    }
};

struct BtImpl
{
    using Result = const kernels::BstNode*;
    std::vector<KeyType> keys;
    std::vector<kernels::Bst> trees; // one private tree per thread
    std::vector<KeyType> q;

    BtImpl(const BenchConfig& c, std::size_t n, int threads)
        : keys(kernels::make_keys(n, c.seed)),
          q(kernels::make_queries(keys, c.queries, c.hit_rate, query_seed(c.seed)))
    {
        for (int t = 0; t < threads; ++t)
            trees.push_back(kernels::build_bst(keys, c.seed + 1000003ull * (t + 1)));
    }

    std::size_t queries() const { return q.size(); }

    void exec(const BenchConfig& c, int t, std::size_t first, std::size_t count, Result* out)
    {
        namespace u = units::bt;
        const KeyType* qs = q.data() + first;
        const kernels::BstNode* root = trees[static_cast<std::size_t>(t)].root;
        if (c.variant == Variant::Baseline) {
            for (std::size_t i = 0; i < count; ++i)
                out[i] = u::BST_find(root, qs[i]);
            return;
        }
        if (c.sched.policy == Policy::Hybrid) {
            with_batch_width(c.sched.width, [&]<int W>() {
                using B = u::CoroutineState_BST_find_hybrid_8<W>;
                run_batched<B>(
                    c.sched, count,
                    [&](B& b, std::size_t f, std::size_t n) {
                        KeyType k[W];
                        const kernels::BstNode* r[W];
                        std::fill_n(r, W, root);
                        runtime::load_padded(qs, f, n, W, k);
                        b.Init(r, k);
                    },
                    out);
            });
            return;
        }
        using C = u::CoroutineState_BST_find;
        run_dynamic<C>(c.sched, count, [&](C& s, std::size_t i) { s = C(root, qs[i]); }, out);
    }

    std::uint64_t digest(Result r) const { return r ? r->key : 0; }
    std::uint64_t reference(std::size_t i) const { return is_member(keys, q[i]) ? q[i] : 0; }
};

struct SlImpl
{
    using Result = const kernels::SkipNode*;
    std::vector<KeyType> keys;
    kernels::SkipList list;
    std::vector<KeyType> q;

    SlImpl(const BenchConfig& c, std::size_t n)
        : keys(kernels::make_keys(n, c.seed)),
          list(kernels::build_skiplist(keys, c.seed + 17)),
          q(kernels::make_queries(keys, c.queries, c.hit_rate, query_seed(c.seed)))
    {}

    std::size_t queries() const { return q.size(); }

    void exec(const BenchConfig& c, int, std::size_t first, std::size_t count, Result* out)
    {
        namespace u = units::sl;
        const KeyType* qs = q.data() + first;
        const kernels::SkipNode* head = list.head();
        if (c.variant == Variant::Baseline) {
            for (std::size_t i = 0; i < count; ++i)
                out[i] = u::SkipList_find(head, qs[i]);
            return;
        }
        if (c.sched.policy == Policy::Hybrid) {
            with_batch_width(c.sched.width, [&]<int W>() {
                using B = u::CoroutineState_SkipList_find_hybrid_8<W>;
                run_batched<B>(
                    c.sched, count,
                    [&](B& b, std::size_t f, std::size_t n) {
                        KeyType k[W];
                        const kernels::SkipNode* h[W];
                        std::fill_n(h, W, head);
                        runtime::load_padded(qs, f, n, W, k);
                        b.Init(h, k);
                    },
                    out);
            });
            return;
        }
        using C = u::CoroutineState_SkipList_find;
        run_dynamic<C>(c.sched, count, [&](C& s, std::size_t i) { s = C(head, qs[i]); }, out);
    }

    std::uint64_t digest(Result r) const { return r ? r->key : 0; }
    std::uint64_t reference(std::size_t i) const { return is_member(keys, q[i]) ? q[i] : 0; }
};

struct SliImpl
{
    using Result = KeyType;
    std::vector<KeyType> keys;
    kernels::SkipList list;
    std::vector<std::size_t> start_rank;
    std::vector<const kernels::SkipNode*> start;
    std::size_t limit;

    SliImpl(const BenchConfig& c, std::size_t n)
        : keys(kernels::make_keys(std::max<std::size_t>(n, 1), c.seed)),
          list(kernels::build_skiplist(keys, c.seed + 17)), limit(c.iter_limit)
    {
        kernels::Rng rng(query_seed(c.seed));
        start_rank.resize(c.queries);
        start.resize(c.queries);
        for (std::size_t i = 0; i < c.queries; ++i) {
            start_rank[i] = rng.below(keys.size());
            start[i] = list.by_rank[start_rank[i]];
        }
    }

    std::size_t queries() const { return start.size(); }

    void exec(const BenchConfig& c, int, std::size_t first, std::size_t count, Result* out)
    {
        namespace u = units::sli;
        const kernels::SkipNode* const* ss = start.data() + first;
        if (c.variant == Variant::Baseline) {
            for (std::size_t i = 0; i < count; ++i)
                out[i] = u::SkipList_next_limit(ss[i], limit);
            return;
        }
        if (c.sched.policy == Policy::Hybrid) {
            with_batch_width(c.sched.width, [&]<int W>() {
                using B = u::CoroutineState_SkipList_next_limit_hybrid_8<W>;
                run_batched<B>(
                    c.sched, count,
                    [&](B& b, std::size_t f, std::size_t n) {
                        const kernels::SkipNode* s[W];
                        std::size_t l[W];
                        std::fill_n(l, W, limit);
                        runtime::load_padded(ss, f, n, W, s);
                        b.Init(s, l);
                    },
                    out);
            });
            return;
        }
        using C = u::CoroutineState_SkipList_next_limit;
        run_dynamic<C>(c.sched, count, [&](C& s, std::size_t i) { s = C(ss[i], limit); }, out);
    }

    std::uint64_t digest(Result r) const { return r; }
    std::uint64_t reference(std::size_t i) const
    {
        std::size_t r = start_rank[i] + limit;
        return r < keys.size() ? keys[r] : kernels::kSkipSentinel;
    }
};

struct HtImpl
{
    using Result = const kernels::Slot*;
    std::vector<KeyType> keys;
    kernels::HashTable table;
    std::vector<KeyType> q;

    HtImpl(const BenchConfig& c, std::size_t n)
        : keys(kernels::make_keys(n, c.seed)), table(kernels::build_hashtable(keys, c.hash)),
          q(kernels::make_queries(keys, c.queries, c.hit_rate, query_seed(c.seed)))
    {}

    std::size_t queries() const { return q.size(); }

    template <typename U>
    void exec_with(const BenchConfig& c, std::size_t first, std::size_t count, Result* out)
    {
        const KeyType* qs = q.data() + first;
        const kernels::Slot* ht = table.slots.data();
        std::uint64_t mask = table.mask;
        if (c.variant == Variant::Baseline) {
            for (std::size_t i = 0; i < count; ++i)
                out[i] = U::HashTable_find(ht, mask, qs[i]);
            return;
        }
        auto init = [&](auto& b, std::size_t f, std::size_t n) {
            using B = std::remove_cvref_t<decltype(b)>;
            KeyType k[B::Width];
            runtime::load_padded(qs, f, n, B::Width, k);
            b.Init(typename B::Shared{ht, mask}, k);
        };
        if (c.sched.policy == Policy::StaticBatch) {
            with_batch_width(c.sched.width, [&]<int W>() {
                run_batched<typename U::template Static<W>>(c.sched, count, init, out);
            });
            return;
        }
        if (c.sched.policy == Policy::Hybrid) {
            with_batch_width(c.sched.width, [&]<int W>() {
                run_batched<typename U::template Hybrid<W>>(c.sched, count, init, out);
            });
            return;
        }
        using C = typename U::Dynamic;
        typename C::Shared sh{ht, mask};
        run_dynamic<C>(c.sched, count, [&](C& s, std::size_t i) { s = C(&sh, qs[i]); }, out);
    }

    struct Fmix
    {
        using Dynamic = units::ht_fmix::CoroutineState_HashTable_find;
        template <int W>
        using Static = units::ht_fmix::CoroutineState_HashTable_find_8<W>;
        template <int W>
        using Hybrid = units::ht_fmix::CoroutineState_HashTable_find_hybrid_8<W>;
        static Result HashTable_find(const kernels::Slot* ht, std::uint64_t mask, KeyType k)
        {
            return units::ht_fmix::HashTable_find(ht, mask, k);
        }
    };
    struct Identity
    {
        using Dynamic = units::ht_identity::CoroutineState_HashTable_find;
        template <int W>
        using Static = units::ht_identity::CoroutineState_HashTable_find_8<W>;
        template <int W>
        using Hybrid = units::ht_identity::CoroutineState_HashTable_find_hybrid_8<W>;
        static Result HashTable_find(const kernels::Slot* ht, std::uint64_t mask, KeyType k)
        {
            return units::ht_identity::HashTable_find(ht, mask, k);
        }
    };

    void exec(const BenchConfig& c, int, std::size_t first, std::size_t count, Result* out)
    {
        if (c.hash == kernels::HashKind::Fmix)
            exec_with<Fmix>(c, first, count, out);
        else
            exec_with<Identity>(c, first, count, out);
    }

    // Slot index, so checksums do not depend on where the table lives.
    std::uint64_t digest(Result r) const
    {
        return static_cast<std::uint64_t>(r - table.slots.data());
    }
    std::uint64_t reference(std::size_t i) const
    {
        return digest(kernels::hashtable_find(table, q[i]));
    }
};

struct ChtImpl
{
    using Result = const kernels::ChainNode*;
    std::vector<KeyType> keys;
    kernels::ChainedTable table;
    std::vector<KeyType> q;

    ChtImpl(const BenchConfig& c, std::size_t n)
        : keys(kernels::make_keys(n, c.seed)),
          table(kernels::build_chained(keys, c.hash, c.seed + 29)),
          q(kernels::make_queries(keys, c.queries, c.hit_rate, query_seed(c.seed)))
    {}

    std::size_t queries() const { return q.size(); }

    template <typename U>
    void exec_with(const BenchConfig& c, std::size_t first, std::size_t count, Result* out)
    {
        const KeyType* qs = q.data() + first;
        const kernels::ChainNode* const* buckets = table.buckets.data();
        std::uint64_t mask = table.mask;
        if (c.variant == Variant::Baseline) {
            for (std::size_t i = 0; i < count; ++i)
                out[i] = U::ChainedHash_find(buckets, mask, qs[i]);
            return;
        }
        if (c.sched.policy == Policy::Hybrid) {
            with_batch_width(c.sched.width, [&]<int W>() {
                using B = typename U::template Hybrid<W>;
                run_batched<B>(
                    c.sched, count,
                    [&](B& b, std::size_t f, std::size_t n) {
                        KeyType k[W];
                        runtime::load_padded(qs, f, n, W, k);
                        b.Init(typename B::Shared{buckets, mask}, k);
                    },
                    out);
            });
            return;
        }
        using C = typename U::Dynamic;
        typename C::Shared sh{buckets, mask};
        run_dynamic<C>(c.sched, count, [&](C& s, std::size_t i) { s = C(&sh, qs[i]); }, out);
    }

    struct Fmix
    {
        using Dynamic = units::cht_fmix::CoroutineState_ChainedHash_find;
        template <int W>
        using Hybrid = units::cht_fmix::CoroutineState_ChainedHash_find_hybrid_8<W>;
        static Result ChainedHash_find(const kernels::ChainNode* const* b, std::uint64_t m, KeyType k)
        {
            return units::cht_fmix::ChainedHash_find(b, m, k);
        }
    };
    struct Identity
    {
        using Dynamic = units::cht_identity::CoroutineState_ChainedHash_find;
        template <int W>
        using Hybrid = units::cht_identity::CoroutineState_ChainedHash_find_hybrid_8<W>;
        static Result ChainedHash_find(const kernels::ChainNode* const* b, std::uint64_t m, KeyType k)
        {
            return units::cht_identity::ChainedHash_find(b, m, k);
        }
    };

    void exec(const BenchConfig& c, int, std::size_t first, std::size_t count, Result* out)
    {
        if (c.hash == kernels::HashKind::Fmix)
            exec_with<Fmix>(c, first, count, out);
        else
            exec_with<Identity>(c, first, count, out);
    }

    std::uint64_t digest(Result r) const { return r ? r->key : 0; }
    std::uint64_t reference(std::size_t i) const { return is_member(keys, q[i]) ? q[i] : 0; }
};

} // namespace detail

// Elements of the index that fit in the configured dataset size.
inline std::size_t element_count(const BenchConfig& c)
{
    std::uint64_t per = 8;
    if (c.kernel == "bt")
        per = sizeof(kernels::BstNode);
    else if (c.kernel == "sl" || c.kernel == "sli")
        per = sizeof(kernels::SkipNode);
    else if (c.kernel == "ht")
        per = 2 * sizeof(kernels::Slot); // half-full table
    else if (c.kernel == "cht")
        per = sizeof(kernels::ChainNode) + sizeof(void*);
    return static_cast<std::size_t>(std::max<std::uint64_t>(1, c.dataset_bytes / per));
}

// Bytes the run will hold: indexes, key vector, queries and results.
inline std::uint64_t memory_estimate(const BenchConfig& c, int max_threads)
{
    std::uint64_t n = element_count(c);
    std::uint64_t index = c.dataset_bytes;
    if (c.kernel == "bt")
        index *= static_cast<std::uint64_t>(max_threads);
    return index + n * sizeof(KeyType) + c.queries * 3 * sizeof(std::uint64_t);
}

inline std::uint64_t physical_memory()
{
#if defined(__linux__)
    long pages = sysconf(_SC_PHYS_PAGES);
    long size = sysconf(_SC_PAGE_SIZE);
    if (pages > 0 && size > 0)
        return static_cast<std::uint64_t>(pages) * static_cast<std::uint64_t>(size);
#endif
    return 0;
}

inline std::string human_bytes(std::uint64_t b)
{
    std::ostringstream o;
    o << std::fixed << std::setprecision(2) << static_cast<double>(b) / (1 << 30) << " GiB";
    return o.str();
}

// Builds the index and query stream; bt builds max_threads private trees.
inline std::unique_ptr<Workload> make_workload(const BenchConfig& c, int max_threads = 0)
{
    c.check();
    max_threads = std::max(max_threads, c.threads);
    if (auto phys = physical_memory()) {
        auto need = memory_estimate(c, max_threads);
        if (need > phys / 10 * 8)
            throw ConfigError("run needs about " + human_bytes(need) + " but the machine has " +
                              human_bytes(phys) + "; lower --size or --queries");
    }
    std::size_t n = element_count(c);
    using namespace detail;
    if (c.kernel == "bs")
        return std::make_unique<KernelWorkload<BsImpl>>(c, n);
    if (c.kernel == "bt")
        return std::make_unique<KernelWorkload<BtImpl>>(c, n, max_threads);
    if (c.kernel == "sl")
        return std::make_unique<KernelWorkload<SlImpl>>(c, n);
    if (c.kernel == "sli")
        return std::make_unique<KernelWorkload<SliImpl>>(c, n);
    if (c.kernel == "ht")
        return std::make_unique<KernelWorkload<HtImpl>>(c, n);
    return std::make_unique<KernelWorkload<ChtImpl>>(c, n);
}

inline bool pin_thread(int t)
{
#if defined(__linux__)
    unsigned cpus = std::max(1u, std::thread::hardware_concurrency());
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(static_cast<unsigned>(t) % cpus, &set);
    return pthread_setaffinity_np(pthread_self(), sizeof(set), &set) == 0;
#else
    static_cast<void>(t);
    return false;
#endif
}

struct ThreadResult
{
    std::uint64_t ns = 0;
    std::uint64_t checksum = 0;
    std::size_t count = 0;
};

// Runs the query phase on cfg.threads threads over contiguous slices of the
// query stream. `digests`, when given, receives every query's digest.
inline std::vector<BenchRow> execute(Workload& w, const BenchConfig& c,
                                     std::vector<std::uint64_t>* digests = nullptr,
                                     std::ostream* log = nullptr)
{
    c.check();
    const int T = c.threads;
    const std::size_t Q = w.queries();
    std::vector<ThreadResult> res(static_cast<std::size_t>(T));
    std::vector<std::uint64_t> all(Q);
    std::barrier sync(T);
    std::atomic<bool> pin_failed{false};
    auto body = [&](int t) {
        if (c.pin && !pin_thread(t))
            pin_failed = true;
        std::size_t first = Q * static_cast<std::size_t>(t) / static_cast<std::size_t>(T);
        std::size_t last = Q * static_cast<std::size_t>(t + 1) / static_cast<std::size_t>(T);
        sync.arrive_and_wait();
        auto& r = res[static_cast<std::size_t>(t)];
        r.count = last - first;
        r.ns = w.run(c, t, first, r.count, all.data() + first);
        for (std::size_t i = first; i < last; ++i)
            r.checksum = fold(r.checksum, all[i]);
    };
    if (log && c.verbose)
        *log << "phase: query start (" << T << " thread(s), " << Q << " queries)\n";
    std::vector<std::thread> pool;
    for (int t = 1; t < T; ++t)
        pool.emplace_back(body, t);
    body(0);
    for (auto& th : pool)
        th.join();
    if (log && c.verbose)
        *log << "phase: query end\n";
    if (log && pin_failed)
        *log << "warning: thread pinning unavailable; threads run unpinned\n";

    std::vector<BenchRow> rows;
    BenchRow base{c.kernel,
                  std::string(to_string(c.variant)),
                  c.variant == Variant::Baseline ? "none" : std::string(to_string(c.sched.policy)),
                  c.variant == Variant::Baseline ? 1 : c.sched.width,
                  T,
                  c.seed,
                  0,
                  0,
                  0,
                  0,
                  ""};
    std::uint64_t max_ns = 0;
    std::uint64_t sum = 0;
    for (int t = 0; t < T; ++t) {
        const auto& r = res[static_cast<std::size_t>(t)];
        BenchRow row = base;
        row.scope = "thread" + std::to_string(t);
        row.queries = r.count;
        row.total_ns = r.ns;
        row.ops_per_sec = r.ns && r.count ? static_cast<double>(r.count) * 1e9 / r.ns : 0.0;
        row.checksum = r.checksum;
        rows.push_back(row);
        max_ns = std::max(max_ns, r.ns);
        sum += r.checksum;
    }
    BenchRow agg = base;
    agg.scope = "aggregate";
    agg.queries = Q;
    agg.total_ns = max_ns;
    agg.ops_per_sec = max_ns && Q ? static_cast<double>(Q) * 1e9 / max_ns : 0.0;
    agg.checksum = sum;
    rows.push_back(agg);
    if (digests)
        *digests = std::move(all);
    return rows;
}

inline std::vector<BenchRow> run_bench(const BenchConfig& c, std::ostream* log = nullptr)
{
    if (log && c.verbose)
        *log << "phase: build " << c.kernel << " (" << element_count(c) << " elements)\n";
    auto w = make_workload(c);
    return execute(*w, c, nullptr, log);
}

// ---- output ---------------------------------------------------------------

inline constexpr const char* kCsvHeader =
    "kernel,variant,policy,width,threads,seed,queries,ops_per_sec,total_ns,checksum,scope";

inline std::string csv_line(const BenchRow& r)
{
    std::ostringstream o;
    o << r.kernel << ',' << r.variant << ',' << r.policy << ',' << r.width << ',' << r.threads
      << ',' << r.seed << ',' << r.queries << ',' << std::fixed << std::setprecision(1)
      << r.ops_per_sec << ',' << r.total_ns << ',' << r.checksum << ',' << r.scope;
    return o.str();
}

inline nlohmann::json to_json(const BenchRow& r)
{
    return {{"kernel", r.kernel},   {"variant", r.variant},   {"policy", r.policy},
            {"width", r.width},     {"threads", r.threads},   {"seed", r.seed},
            {"queries", r.queries}, {"ops_per_sec", r.ops_per_sec},
            {"total_ns", r.total_ns}, {"checksum", r.checksum}, {"scope", r.scope}};
}

inline void write_rows(std::ostream& out, const std::vector<BenchRow>& rows, Format f)
{
    if (f == Format::Csv) {
        out << kCsvHeader << '\n';
        for (const auto& r : rows)
            out << csv_line(r) << '\n';
        return;
    }
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back(to_json(r));
    out << arr.dump(2) << '\n';
}

// ---- self test ------------------------------------------------------------

struct SelftestCase
{
    std::string kernel;
    std::string variant;
    std::string policy;
    int width;
    bool ok;
    std::size_t mismatches;
};

// Every kernel, every legal schedule, against the reference digests.
inline std::vector<SelftestCase> selftest(std::uint64_t seed, std::uint64_t queries,
                                          std::uint64_t bytes)
{
    std::vector<SelftestCase> out;
    for (auto k : kKernels) {
        BenchConfig c;
        c.kernel = std::string(k);
        c.seed = seed;
        c.queries = queries;
        c.dataset_bytes = bytes;
        c.hit_rate = 0.5;
        c.iter_limit = 37;
        c.pin = false;
        auto w = make_workload(c);
        std::vector<std::uint64_t> ref(w->queries());
        w->reference(0, ref.size(), ref.data());
        auto check = [&](BenchConfig cc) {
            std::vector<std::uint64_t> got;
            execute(*w, cc, &got);
            std::size_t bad = 0;
            for (std::size_t i = 0; i < ref.size(); ++i)
                bad += got[i] != ref[i];
            bool base = cc.variant == Variant::Baseline;
            out.push_back({cc.kernel, to_string(cc.variant),
                           base ? std::string("none") : to_string(cc.sched.policy),
                           base ? 1 : cc.sched.width, bad == 0, bad});
        };
        c.variant = Variant::Baseline;
        check(c);
        c.variant = Variant::Coro;
        for (Policy p : {Policy::DynamicRefill, Policy::PushPull, Policy::StaticBatch,
                         Policy::Hybrid}) {
            if (p == Policy::StaticBatch && c.kernel != "ht")
                continue;
            for (int width : {1, 8, 48}) {
                c.sched.policy = p;
                c.sched.width = width;
                check(c);
            }
        }
    }
    return out;
}

} // namespace coil::bench

#endif // COIL_BENCH_BENCH_HPP
