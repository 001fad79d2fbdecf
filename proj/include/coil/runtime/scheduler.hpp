// scheduler.hpp
// Single-thread schedulers that keep `width` coroutine instances in flight.
//
//   run_simplest      refill a slot as soon as its task finishes
//   run_push_pull     same, with tasks pushed in and results pulled out
//   run_static_batch  width tasks per group, every stage fused across the group
//   run_hybrid        fused static prefix, then per-slot steps over the group
//
// Dynamic policies take any type with bool Step(), bool Done() and Reset().
// Batch policies take the generated SoA units.

#ifndef COIL_RUNTIME_SCHEDULER_HPP
#define COIL_RUNTIME_SCHEDULER_HPP

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace coil::runtime {

enum class Policy { StaticBatch, DynamicRefill, PushPull, Hybrid };
enum class Drain { InOrder, OutOfOrder };

inline std::string to_string(Policy p)
{
    switch (p) {
    case Policy::StaticBatch: return "static";
    case Policy::DynamicRefill: return "dynamic";
    case Policy::PushPull: return "pushpull";
    case Policy::Hybrid: return "hybrid";
    }
    return "?";
}

inline std::string to_string(Drain d)
{
    return d == Drain::InOrder ? "inorder" : "outoforder";
}

class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

struct SchedulerConfig
{
    int width = 48;
    Policy policy = Policy::DynamicRefill;
    Drain drain = Drain::OutOfOrder;

    void check() const
    {
        if (width < 1)
            throw ConfigError("scheduler width must be at least 1, got " + std::to_string(width));
    }
};

template <typename C>
concept StepCoroutine = std::copy_constructible<C> && requires(C c, const C cc) {
    { c.Step() } -> std::convertible_to<bool>;
    { cc.Done() } -> std::convertible_to<bool>;
    c.Reset();
};

template <typename B>
concept BatchUnit = requires(B b) {
    { B::Width } -> std::convertible_to<int>;
    { b.SuperStep() } -> std::convertible_to<bool>;
};

template <typename B>
concept HybridUnit = requires(B b, int i) {
    { B::Width } -> std::convertible_to<int>;
    b.Prefix();
    { b.Step(i) } -> std::convertible_to<bool>;
    { b.Done(i) } -> std::convertible_to<bool>;
};

namespace detail {

// Hands finished tasks to `retire`, in submission order when asked to.
template <typename C, typename Retire>
class Retirer
{
public:
    Retirer(Drain drain, Retire& retire) : in_order_(drain == Drain::InOrder), retire_(retire) {}

    void operator()(C& slot, std::size_t task)
    {
        if (!in_order_) {
            retire_(slot, task);
            return;
        }
        if (task != next_) {
            parked_.emplace(task, slot);
            return;
        }
        retire_(slot, task);
        ++next_;
        for (auto it = parked_.begin(); it != parked_.end() && it->first == next_;
             it = parked_.erase(it), ++next_)
            retire_(it->second, it->first);
    }

private:
    bool in_order_;
    Retire& retire_;
    std::size_t next_ = 0;
    std::map<std::size_t, C> parked_;
};

struct NoRetire
{
    template <typename C>
    void operator()(C&, std::size_t) const
    {}
};

} // namespace detail

// refill(C& slot, std::size_t task) must fully initialize the slot;
// retire(C& slot, std::size_t task) runs once per finished task.
// Returns the number of tasks completed.
template <StepCoroutine C, typename Refill, typename Retire = detail::NoRetire>
std::size_t run_simplest(const SchedulerConfig& cfg, std::size_t tasks, Refill refill,
                         Retire retire = {})
{
    cfg.check();
    const auto width = static_cast<std::size_t>(cfg.width);
    detail::Retirer<C, Retire> done(cfg.drain, retire);
    std::vector<C> cs(width);
    std::vector<std::size_t> task(width, 0);
    std::vector<char> active(width, 0);

    std::size_t fill = std::min(width, tasks);
    for (std::size_t i = 0; i < fill; ++i) {
        refill(cs[i], i);
        task[i] = i;
        active[i] = 1;
    }
    std::size_t next = fill;
    std::size_t completed = 0;
    while (next < tasks) {
        for (std::size_t i = 0; i < width; ++i) {
            if (!cs[i].Step())
                continue;
            done(cs[i], task[i]);
            ++completed;
            if (next < tasks) {
                refill(cs[i], next);
                task[i] = next++;
            } else {
                active[i] = 0;
            }
        }
    }
    // Drain round-robin so the tail keeps several misses in flight.
    // No further refill.
    std::size_t live = static_cast<std::size_t>(std::count(active.begin(), active.end(), 1));
    while (live > 0) {
        for (std::size_t i = 0; i < width; ++i) {
            if (!active[i] || !(cs[i].Done() || cs[i].Step()))
                continue;
            done(cs[i], task[i]);
            ++completed;
            active[i] = 0;
            --live;
        }
    }
    return completed;
}

// push(C& slot) -> false once the stream is exhausted (the slot is then
// unused). pull(C& slot) -> false restarts the slot as a generator, except
// while draining where it ends the slot.
template <StepCoroutine C, typename Push, typename Pull>
void run_push_pull(const SchedulerConfig& cfg, Push push, Pull pull)
{
    cfg.check();
    const auto width = static_cast<std::size_t>(cfg.width);
    std::vector<C> cs(width);
    std::vector<char> active(width, 0);
    bool draining = false;

    for (std::size_t i = 0; i < width && !draining; ++i) {
        if (push(cs[i]))
            active[i] = 1;
        else
            draining = true;
    }
    while (!draining) {
        for (std::size_t i = 0; i < width; ++i) {
            if (!cs[i].Step())
                continue;
            if (!pull(cs[i])) {
                cs[i].Reset();
            } else if (!push(cs[i])) {
                active[i] = 0;
                draining = true;
                break;
            }
        }
    }
    std::size_t live = static_cast<std::size_t>(std::count(active.begin(), active.end(), 1));
    while (live > 0) {
        for (std::size_t i = 0; i < width; ++i) {
            if (!active[i] || !(cs[i].Done() || cs[i].Step()))
                continue;
            pull(cs[i]);
            active[i] = 0;
            --live;
        }
    }
}

// load(B& batch, std::size_t first, std::size_t count) calls Init with
// B::Width tasks, padding slots [count, Width) itself; store(const B& batch,
// std::size_t first, std::size_t count) reads back the first count results.
template <BatchUnit B, typename Load, typename Store>
void run_static_batch(const SchedulerConfig& cfg, B& batch, std::size_t tasks, Load load,
                      Store store)
{
    cfg.check();
    if (cfg.width != B::Width)
        throw ConfigError("static batch compiled for width " + std::to_string(B::Width) +
                          ", configured width " + std::to_string(cfg.width));
    const auto width = static_cast<std::size_t>(B::Width);
    for (std::size_t first = 0; first < tasks; first += width) {
        std::size_t count = std::min(width, tasks - first);
        load(batch, first, count);
        while (!batch.SuperStep()) {
        }
        store(std::as_const(batch), first, count);
    }
}

// Same callbacks as run_static_batch. Padding slots skip the dynamic part.
template <HybridUnit B, typename Load, typename Store>
void run_hybrid(const SchedulerConfig& cfg, B& batch, std::size_t tasks, Load load, Store store)
{
    cfg.check();
    if (cfg.width != B::Width)
        throw ConfigError("hybrid batch compiled for width " + std::to_string(B::Width) +
                          ", configured width " + std::to_string(cfg.width));
    const auto width = static_cast<std::size_t>(B::Width);
    for (std::size_t first = 0; first < tasks; first += width) {
        std::size_t count = std::min(width, tasks - first);
        load(batch, first, count);
        batch.Prefix();
        std::size_t live = 0;
        for (std::size_t i = 0; i < count; ++i)
            live += batch.Done(static_cast<int>(i)) ? 0 : 1;
        while (live > 0) {
            for (std::size_t i = 0; i < count; ++i) {
                int s = static_cast<int>(i);
                if (!batch.Done(s) && batch.Step(s))
                    --live;
            }
        }
        store(std::as_const(batch), first, count);
    }
}

// Copies src[first, first + count) to dst and pads up to width by repeating
// the group's first task. Padding results are discarded by the caller.
template <typename T>
void load_padded(const T* src, std::size_t first, std::size_t count, std::size_t width, T* dst)
{
    for (std::size_t i = 0; i < width; ++i)
        dst[i] = src[first + (i < count ? i : 0)];
}

} // namespace coil::runtime

#endif // COIL_RUNTIME_SCHEDULER_HPP
