// sched_sim.hpp
// Drives every scheduling policy with fake coroutines and counts how often
// each task is initialized and drained.

#ifndef COIL_TESTS_SCHED_SIM_HPP
#define COIL_TESTS_SCHED_SIM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "coil/kernels/hash.hpp"
#include "coil/runtime/scheduler.hpp"

namespace coil::testing {

enum class StepMode { One, Two, Variable };

inline const char* to_string(StepMode m)
{
    switch (m) {
    case StepMode::One: return "1";
    case StepMode::Two: return "2";
    case StepMode::Variable: return "variable";
    }
    return "?";
}

inline int steps_for(StepMode m, std::size_t task)
{
    switch (m) {
    case StepMode::One: return 1;
    case StepMode::Two: return 2;
    case StepMode::Variable: return 1 + static_cast<int>(kernels::fmix64(task + 1) % 7);
    }
    return 1;
}

struct SimCase
{
    runtime::Policy policy;
    runtime::Drain drain;
    int width;
    std::size_t tasks;
    StepMode mode;

    std::string describe() const
    {
        return std::string(runtime::to_string(policy)) + "/" + runtime::to_string(drain) +
               " w=" + std::to_string(width) + " tasks=" + std::to_string(tasks) +
               " steps=" + to_string(mode);
    }
};

struct Tally
{
    std::vector<int> init;
    std::vector<int> drained;
    std::vector<int> steps;
    std::vector<int> want_steps;
    bool stepped_finished = false;

    explicit Tally(const SimCase& c)
        : init(c.tasks, 0), drained(c.tasks, 0), steps(c.tasks, 0), want_steps(c.tasks, 0)
    {
        for (std::size_t t = 0; t < c.tasks; ++t)
            want_steps[t] = steps_for(c.mode, t);
    }

    // Empty when every task ran its full step count, was initialized once
    // and drained once.
    std::string problems() const
    {
        if (stepped_finished)
            return "a finished coroutine was stepped";
        for (std::size_t t = 0; t < init.size(); ++t) {
            if (init[t] != 1)
                return "task " + std::to_string(t) + " initialized " + std::to_string(init[t]) + "x";
            if (drained[t] != 1)
                return "task " + std::to_string(t) + " drained " + std::to_string(drained[t]) + "x";
            if (steps[t] != want_steps[t])
                return "task " + std::to_string(t) + " ran " + std::to_string(steps[t]) +
                       " steps, expected " + std::to_string(want_steps[t]);
        }
        return {};
    }
};

struct SimCoroutine
{
    Tally* tally = nullptr;
    std::size_t task = 0;
    int left = 0;

    bool Step()
    {
        if (left == 0) {
            tally->stepped_finished = true;
            return true;
        }
        ++tally->steps[task];
        return --left == 0;
    }
    bool Done() const { return left == 0; }
    void Reset() {}
};

// Fused SoA stand-in: SuperStep advances every live slot; Prefix runs one
// fused step, the rest go through Step(i).
template <int W>
struct SimBatch
{
    static constexpr int Width = W;
    Tally* tally = nullptr;
    std::size_t task[W]{};
    bool real[W]{};
    int left[W]{};

    void advance(int i)
    {
        if (left[i] == 0) {
            tally->stepped_finished = true;
            return;
        }
        if (real[i])
            ++tally->steps[task[i]];
        --left[i];
    }
    bool SuperStep()
    {
        bool all = true;
        for (int i = 0; i < W; ++i) {
            if (left[i] > 0)
                advance(i);
            all = all && left[i] == 0;
        }
        return all;
    }
    void Prefix()
    {
        for (int i = 0; i < W; ++i)
            advance(i);
    }
    bool Done(int i) const { return left[i] == 0; }
    bool Step(int i)
    {
        advance(i);
        return left[i] == 0;
    }
};

template <int W>
std::string simulate_batched(const SimCase& c, Tally& tally)
{
    SimBatch<W> b;
    b.tally = &tally;
    runtime::SchedulerConfig cfg{W, c.policy, c.drain};
    auto load = [&](SimBatch<W>& batch, std::size_t first, std::size_t count) {
        std::size_t ids[W];
        std::vector<std::size_t> all(c.tasks);
        for (std::size_t t = 0; t < c.tasks; ++t)
            all[t] = t;
        runtime::load_padded(all.data(), first, count, W, ids);
        for (int i = 0; i < W; ++i) {
            batch.task[i] = ids[i];
            batch.real[i] = static_cast<std::size_t>(i) < count;
            batch.left[i] = tally.want_steps[ids[i]];
            if (batch.real[i])
                ++tally.init[ids[i]];
        }
    };
    auto store = [&](const SimBatch<W>& batch, std::size_t first, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            if (batch.task[i] != first + i || batch.left[i] != 0)
                tally.stepped_finished = true;
            ++tally.drained[first + i];
        }
    };
    if (c.policy == runtime::Policy::StaticBatch)
        runtime::run_static_batch(cfg, b, c.tasks, load, store);
    else
        runtime::run_hybrid(cfg, b, c.tasks, load, store);
    return tally.problems();
}

// Empty string on success, otherwise the first problem found.
inline std::string simulate(const SimCase& c)
{
    using runtime::Policy;
    Tally tally(c);
    runtime::SchedulerConfig cfg{c.width, c.policy, c.drain};
    switch (c.policy) {
    case Policy::DynamicRefill: {
        std::size_t next_in_order = 0;
        bool order_ok = true;
        runtime::run_simplest<SimCoroutine>(
            cfg, c.tasks,
            [&](SimCoroutine& s, std::size_t t) {
                s = {&tally, t, tally.want_steps[t]};
                ++tally.init[t];
            },
            [&](SimCoroutine& s, std::size_t t) {
                if (s.task != t || !s.Done())
                    tally.stepped_finished = true;
                order_ok = order_ok && (c.drain == runtime::Drain::OutOfOrder || t == next_in_order++);
                ++tally.drained[t];
            });
        if (!order_ok)
            return "in-order drain retired out of order";
        return tally.problems();
    }
    case Policy::PushPull: {
        std::size_t next = 0;
        runtime::run_push_pull<SimCoroutine>(
            cfg,
            [&](SimCoroutine& s) {
                if (next == c.tasks)
                    return false;
                s = {&tally, next, tally.want_steps[next]};
                ++tally.init[next++];
                return true;
            },
            [&](SimCoroutine& s) {
                ++tally.drained[s.task];
                return true;
            });
        return tally.problems();
    }
    case Policy::StaticBatch:
    case Policy::Hybrid:
        switch (c.width) {
        case 1: return simulate_batched<1>(c, tally);
        case 2: return simulate_batched<2>(c, tally);
        case 48: return simulate_batched<48>(c, tally);
        default: return "no batched stand-in for width " + std::to_string(c.width);
        }
    }
    return "unknown policy";
}

// Widths {1, 2, 48} x tasks {0, 1, w - 1, w, 10 w} x steps {1, 2, variable}
// for every policy and drain order.
inline std::vector<SimCase> all_sim_cases()
{
    using runtime::Drain;
    using runtime::Policy;
    std::vector<SimCase> out;
    for (Policy p : {Policy::StaticBatch, Policy::DynamicRefill, Policy::PushPull, Policy::Hybrid})
        for (Drain d : {Drain::InOrder, Drain::OutOfOrder})
            for (int w : {1, 2, 48})
                for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t(w - 1),
                                      std::size_t(w), std::size_t(10 * w)})
                    for (StepMode m : {StepMode::One, StepMode::Two, StepMode::Variable})
                        out.push_back({p, d, w, n, m});
    return out;
}

} // namespace coil::testing

#endif // COIL_TESTS_SCHED_SIM_HPP
