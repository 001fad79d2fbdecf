// coil-acceptance: one PASS/FAIL line per acceptance criterion.
//
// Environment:
//   COIL_PERF_BYTES    tree size for the throughput smoke run (default 1G)
//   COIL_PERF_QUERIES  lookups per variant in that run (default 1000000)
//   COIL_ACCEPT_QUICK  when set, criterion 1 uses 10^4 queries per seed

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>
#include <sys/wait.h>
#include <unistd.h>

#include "bench.hpp"
#include "coil/codegen.hpp"
#include "coil/kernels/defs.hpp"
#include "coil/lowering.hpp"
#include "sched_sim.hpp"
#include "test_support.hpp"
#include "tracked.hpp"

namespace fs = std::filesystem;
namespace bn = coil::bench;
namespace kn = coil::kernels;
namespace rt = coil::runtime;
namespace units = coil::units;

namespace {

enum class Verdict { Pass, Fail, Info };

struct Outcome
{
    Verdict verdict;
    std::string detail;
};

Outcome pass(std::string d) { return {Verdict::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Verdict::Fail, std::move(d)}; }

std::uint64_t env_u64(const char* name, std::uint64_t fallback)
{
    const char* v = std::getenv(name);
    if (!v || !*v)
        return fallback;
    std::string s(v);
    std::uint64_t mult = 1;
    switch (s.back()) {
    case 'K': case 'k': mult = 1ull << 10; s.pop_back(); break;
    case 'M': case 'm': mult = 1ull << 20; s.pop_back(); break;
    case 'G': case 'g': mult = 1ull << 30; s.pop_back(); break;
    default: break;
    }
    return std::stoull(s) * mult;
}

// ---- 1 ----------------------------------------------------------------------

Outcome oracle_equivalence()
{
    const std::uint64_t queries = std::getenv("COIL_ACCEPT_QUICK") ? 10000 : 100000;
    std::size_t compared = 0;
    for (std::uint64_t seed : {11u, 23u, 37u}) {
        for (std::string kernel : {"bs", "bt", "sl", "sli", "ht", "cht"}) {
            bn::BenchConfig c;
            c.kernel = kernel;
            c.seed = seed;
            c.queries = queries;
            c.dataset_bytes = 16 << 20;
            c.hit_rate = 0.5;
            c.iter_limit = 64;
            c.pin = false;
            auto w = bn::make_workload(c);
            std::vector<std::uint64_t> want(w->queries());
            w->reference(0, want.size(), want.data());
            std::vector<bn::BenchConfig> runs;
            c.variant = bn::Variant::Baseline;
            runs.push_back(c);
            c.variant = bn::Variant::Coro;
            c.sched.width = 48;
            c.sched.policy = rt::Policy::DynamicRefill;
            runs.push_back(c);
            if (kernel == "ht") {
                c.sched.policy = rt::Policy::StaticBatch;
                runs.push_back(c);
                c.sched.policy = rt::Policy::Hybrid;
                runs.push_back(c);
            }
            for (const auto& r : runs) {
                std::vector<std::uint64_t> got;
                bn::execute(*w, r, &got);
                for (std::size_t i = 0; i < want.size(); ++i)
                    if (got[i] != want[i])
                        return fail(kernel + " " + bn::to_string(r.variant) + "/" +
                                    rt::to_string(r.sched.policy) + " seed " +
                                    std::to_string(seed) + " query " + std::to_string(i) +
                                    " differs from the reference");
                compared += got.size();
            }
        }
    }
    return pass(std::to_string(compared) + " results identical to the reference (" +
                std::to_string(queries) + " queries x 3 seeds x 6 kernels)");
}

// ---- 2 ----------------------------------------------------------------------

std::set<std::string> field_names(const coil::lower::ContextSpec& ctx)
{
    std::set<std::string> out = ctx.internal();
    for (const auto& d : ctx.args)
        out.insert(d.name);
    for (const auto& d : ctx.vars)
        out.insert(d.name);
    return out;
}

Outcome fsm_goldens()
{
    auto bst = kn::bst_find_def();
    auto bf = coil::lower::split_stages(bst);
    auto bctx = coil::lower::compute_context(bst, bf);
    if (bf.states.size() + 1 != 3 || bf.finished_id != 2)
        return fail("BST_find: " + std::to_string(bf.states.size() + 1) + " states, finished " +
                    std::to_string(bf.finished_id));
    if (field_names(bctx) != std::set<std::string>{"n", "key", "_state", "_result"})
        return fail("BST_find context fields differ");

    auto ht = kn::hashtable_find_def();
    auto hf = coil::lower::split_stages(ht);
    auto hctx = coil::lower::compute_context(ht, hf);
    if (hf.states.size() + 1 != 4 || hf.finished_id != 3)
        return fail("HashTable_find: " + std::to_string(hf.states.size() + 1) +
                    " states, finished " + std::to_string(hf.finished_id));
    if (field_names(hctx) != std::set<std::string>{"k", "hash", "_state", "_result"})
        return fail("HashTable_find context fields differ");
    auto soa = coil::codegen::emit_context(hctx, {coil::codegen::LayoutKind::SoA, 8}).text;
    for (const char* f : {"_state[8]", "_result[8]", "_soa_k[8]", "_soa_hash[8]"})
        if (soa.find(f) == std::string::npos)
            return fail(std::string("SoA context lacks ") + f);
    return pass("BST_find 3 states (finished 2) {n, key, _state, _result}; HashTable_find 4 "
                "states (finished 3) {k, hash, _state, _result}");
}

// ---- 3 ----------------------------------------------------------------------

Outcome exactly_once()
{
    auto cases = coil::testing::all_sim_cases();
    for (const auto& c : cases) {
        auto why = coil::testing::simulate(c);
        if (!why.empty())
            return fail(c.describe() + ": " + why);
    }
    return pass(std::to_string(cases.size()) +
                " simulations over 4 policies x 2 drains x widths {1,2,48} x 5 task counts x 3 "
                "step profiles");
}

// ---- 4 ----------------------------------------------------------------------

// Number of false returns before the first true; -1 if the contract breaks.
template <typename C>
long yields_of(C c)
{
    long n = 0;
    while (!c.Step()) {
        if (c.Done() || ++n > 1000000)
            return -1;
    }
    if (!c.Done() || !c.Step() || !c.Step())
        return -1;
    return n;
}

std::size_t bst_visits(const kn::BstNode* n, kn::KeyType k)
{
    std::size_t v = 0;
    for (; n; n = n->child[n->key < k]) {
        ++v;
        if (n->key == k)
            break;
    }
    return v;
}

// One suspension per node examined, counting both the drop to a lower level
// and each move along a level.
std::size_t skiplist_visits(const kn::SkipNode* pred, kn::KeyType k)
{
    std::size_t v = 0;
    int h = pred->height;
    for (;;) {
        const kn::SkipNode* n = nullptr;
        for (; h > 0; --h) {
            n = pred->skip[h - 1];
            ++v;
            if (k >= n->key)
                break;
        }
        if (h == 0)
            return v;
        --h;
        while (k > n->key) {
            pred = n;
            n = n->skip[h];
            ++v;
        }
        if (k == n->key)
            return v;
    }
}

Outcome step_contract()
{
    std::string bad;
    auto check = [&](const std::string& what, long got, std::size_t want) {
        if (bad.empty() && got != static_cast<long>(want))
            bad = what + ": " + std::to_string(got) + " yields, expected " + std::to_string(want);
    };
    kn::Rng rng(5);
    for (std::size_t len : {1u, 2u, 3u, 5u, 64u, 1000u, 4097u}) {
        auto keys = kn::make_keys(len, len);
        units::bs_arith::CoroutineState_BinarySearch_lower_bound::Shared sh{keys.data(), len};
        std::size_t log2 = len > 1 ? static_cast<std::size_t>(std::ceil(std::log2(len))) : 0;
        for (auto q : kn::make_queries(keys, 50, 0.5, len + 1))
            check("bs len " + std::to_string(len),
                  yields_of(units::bs_arith::CoroutineState_BinarySearch_lower_bound(&sh, q)), log2);
    }
    auto keys = kn::make_keys(20000, 9);
    auto queries = kn::make_queries(keys, 2000, 0.5, 10);
    auto tree = kn::build_bst(keys, 11);
    auto sl = kn::build_skiplist(keys, 12);
    auto table = kn::build_hashtable(keys, kn::HashKind::Fmix);
    auto chained = kn::build_chained(keys, kn::HashKind::Fmix, 13);
    units::ht_fmix::CoroutineState_HashTable_find::Shared hs{table.slots.data(), table.mask};
    units::cht_fmix::CoroutineState_ChainedHash_find::Shared cs{chained.buckets.data(), chained.mask};
    for (auto q : queries) {
        check("bt", yields_of(units::bt::CoroutineState_BST_find(tree.root, q)),
              bst_visits(tree.root, q));
        check("sl", yields_of(units::sl::CoroutineState_SkipList_find(sl.head(), q)),
              skiplist_visits(sl.head(), q));
        check("ht", yields_of(units::ht_fmix::CoroutineState_HashTable_find(&hs, q)), 2);
        std::size_t chain = 0;
        for (auto n = chained.buckets[kn::fmix64(q) & chained.mask]; n; n = n->next) {
            ++chain;
            if (n->key == q)
                break;
        }
        check("cht", yields_of(units::cht_fmix::CoroutineState_ChainedHash_find(&cs, q)), 2 + chain);
    }
    for (std::size_t limit : {0u, 1u, 7u, 100u, 30000u}) {
        auto start = sl.by_rank[rng.below(sl.by_rank.size())];
        check("sli limit " + std::to_string(limit),
              yields_of(units::sli::CoroutineState_SkipList_next_limit(start, limit)), limit + 1);
    }
    if (!bad.empty())
        return fail(bad);
    return pass("false at each of N yields then true: bs ceil(log2 n), sli limit+1, bt/sl nodes "
                "visited, ht 2, cht 2+chain");
}

// ---- 5 ----------------------------------------------------------------------

Outcome width_one()
{
    using tracked::Event;
    // Results through the benchmark paths.
    for (std::string kernel : {"bs", "bt", "sl", "sli", "ht", "cht"}) {
        bn::BenchConfig c;
        c.kernel = kernel;
        c.queries = 20000;
        c.dataset_bytes = 4 << 20;
        c.hit_rate = 0.5;
        c.iter_limit = 16;
        c.pin = false;
        auto w = bn::make_workload(c);
        c.variant = bn::Variant::Baseline;
        std::vector<std::uint64_t> base, dyn, stat;
        bn::execute(*w, c, &base);
        c.variant = bn::Variant::Coro;
        c.sched.width = 1;
        bn::execute(*w, c, &dyn);
        if (dyn != base)
            return fail(kernel + ": dynamic width 1 results differ from baseline");
        if (kernel == "ht") {
            c.sched.policy = rt::Policy::StaticBatch;
            bn::execute(*w, c, &stat);
            if (stat != base)
                return fail("ht: static width 1 results differ from baseline");
        }
    }

    // Operation order on instrumented nodes.
    auto keys = kn::make_keys(3000, 4);
    auto tree = kn::build_bst(keys, 5);
    auto tt = tracked::mirror(tree);
    auto queries = kn::make_queries(keys, 500, 0.5, 6);
    tracked::g_log.clear();
    for (std::size_t t = 0; t < queries.size(); ++t) {
        tracked::g_task = static_cast<long>(t);
        tracked::BST_find(tt.root, queries[t]);
    }
    auto routine = tracked::g_log;
    tracked::g_log.clear();
    using C = tracked::CoroutineState_BST_find;
    rt::run_simplest<C>({1, rt::Policy::DynamicRefill, rt::Drain::InOrder}, queries.size(),
                        [&](C& c, std::size_t t) {
                            tracked::g_task = static_cast<long>(t);
                            c = C(tt.root, queries[t]);
                        });
    if (tracked::without(tracked::g_log, Event::Prefetch) != routine)
        return fail("BST_find dynamic width 1 reads in a different order than the routine");

    auto slots = tracked::make_table(keys, 8192);
    std::uint64_t mask = slots.size() - 1;
    tracked::g_log.clear();
    for (auto q : queries)
        tracked::HashTable_find(slots.data(), mask, q);
    routine = tracked::g_log;
    tracked::g_log.clear();
    tracked::CoroutineState_HashTable_find_8<1> b;
    for (auto q : queries) {
        b.Init({slots.data(), mask}, &q);
        b.SuperStep();
    }
    if (tracked::without(tracked::g_log, Event::Prefetch) != routine)
        return fail("HashTable_find static width 1 reads in a different order than the routine");
    return pass("width-1 dynamic (6 kernels) and static (ht) match baseline results; instrumented "
                "read order matches the routine");
}

// ---- 6 ----------------------------------------------------------------------

// The five finalizer steps, in 64-bit arithmetic truncated by hand.
std::uint32_t fmix32_reference(std::uint32_t in)
{
    std::uint64_t h = in;
    h = h ^ (h >> 16);
    h = (h * 0x85ebca6bull) % 0x100000000ull;
    h = h ^ (h >> 13);
    h = (h * 0xc2b2ae35ull) % 0x100000000ull;
    h = h ^ (h >> 16);
    return static_cast<std::uint32_t>(h);
}

Outcome murmur()
{
    if (kn::fmix32(0) != 0)
        return fail("fmix32(0) != 0");
    kn::Rng rng(99);
    for (int i = 0; i < 1000; ++i) {
        auto x = static_cast<std::uint32_t>(rng.next());
        if (kn::fmix32(x) != fmix32_reference(x))
            return fail("fmix32 disagrees with the reference at " + std::to_string(x));
    }
    std::unordered_set<std::uint32_t> inputs, outputs;
    inputs.reserve(1 << 21);
    outputs.reserve(1 << 21);
    while (inputs.size() < 1000000) {
        auto x = static_cast<std::uint32_t>(rng.next());
        if (inputs.insert(x).second && !outputs.insert(kn::fmix32(x)).second)
            return fail("collision at input " + std::to_string(x));
    }
    return pass("fmix32(0)=0, 1000 values match the reference, no collisions in 10^6 random "
                "inputs");
}

// ---- 7 ----------------------------------------------------------------------

Outcome perf_smoke()
{
    bn::BenchConfig c;
    c.kernel = "bt";
    c.dataset_bytes = env_u64("COIL_PERF_BYTES", 1ull << 30);
    c.queries = env_u64("COIL_PERF_QUERIES", 1000000);
    c.hit_rate = 1.0;
    c.pin = true;
    std::string note;
    if (auto phys = bn::physical_memory()) {
        while (bn::memory_estimate(c, 1) > phys / 2 && c.dataset_bytes > (64ull << 20)) {
            c.dataset_bytes /= 2;
            note = ", scaled down to fit memory";
        }
    }
    try {
        auto w = bn::make_workload(c);
        c.variant = bn::Variant::Baseline;
        auto base = bn::execute(*w, c).back();
        c.variant = bn::Variant::Coro;
        c.sched.width = 48;
        auto coro = bn::execute(*w, c).back();
        double ratio = base.ops_per_sec > 0 ? coro.ops_per_sec / base.ops_per_sec : 0.0;
        std::ostringstream o;
        o << std::fixed << std::setprecision(2) << "bt " << (c.dataset_bytes >> 20) << " MiB"
          << note << ", width 48, 1 thread: baseline " << base.ops_per_sec / 1e6
          << " Mops/s, interleaved " << coro.ops_per_sec / 1e6 << " Mops/s, ratio " << ratio
          << "x (target >= 1.5x on a >= 1 GiB tree)";
        if (base.checksum != coro.checksum)
            return fail(o.str() + "; checksums differ");
        return {Verdict::Info, o.str()};
    } catch (const std::exception& e) {
        return {Verdict::Info, std::string("skipped: ") + e.what()};
    }
}

// ---- 8 ----------------------------------------------------------------------

int run_gen(const fs::path& dir)
{
    fs::create_directories(dir);
    std::string cmd = std::string(COIL_GEN_PATH) + " --all --out-dir " + dir.string();
    for (const char* d : {"Synth_mix", "Synth_walk", "Synth_static"})
        cmd += std::string(" ") + COIL_TEST_DEFS_DIR + "/" + d + ".coil";
    cmd += " 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome codegen_determinism()
{
    auto root = fs::temp_directory_path() / ("coil-accept-" + std::to_string(::getpid()));
    fs::remove_all(root);
    auto a = root / "a";
    auto b = root / "b";
    if (run_gen(a) != 0 || run_gen(b) != 0) {
        fs::remove_all(root);
        return fail("coil-gen exited with an error");
    }
    std::size_t files = 0;
    std::string bad;
    for (const auto& e : fs::directory_iterator(a)) {
        ++files;
        auto other = b / e.path().filename();
        if (!fs::exists(other) ||
            coil::testing::read_file(e.path().string()) != coil::testing::read_file(other.string()))
            bad = e.path().filename().string();
    }
    fs::remove_all(root);
    if (files != 9)
        return fail("expected 9 generated files, found " + std::to_string(files));
    if (!bad.empty())
        return fail(bad + " differs between runs");
    return pass("9 units byte-identical across two coil-gen runs; all compiled into this binary "
                "with -Werror");
}

} // namespace

int main()
{
    struct Criterion
    {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"oracle equivalence", oracle_equivalence},
        {"fsm golden shapes", fsm_goldens},
        {"scheduler exactly-once", exactly_once},
        {"step contract", step_contract},
        {"width-1 collapse", width_one},
        {"murmur3 finalizer", murmur},
        {"performance smoke", perf_smoke},
        {"codegen determinism", codegen_determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].run();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "INFO";
        failures += o.verdict == Verdict::Fail;
        std::printf("%s %zu %s: %s [%.1fs]\n", tag, i + 1, criteria[i].name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
