// lowering.hpp
// Splits a validated definition into stages at its suspension points.
//
// Structured control flow is flattened into basic blocks. Every Yield ends a
// block with a Suspend terminator whose continuation block becomes a new
// state; state ids follow program order of the reachable Yields, entry is
// state 0 and the finished state is one past the last. The generated step
// function later dispatches on the state, runs blocks until it meets a
// Suspend or Finish, records the next state and returns.

#ifndef COIL_LOWERING_HPP
#define COIL_LOWERING_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coil/dsl.hpp"

namespace coil::lower {

using dsl::Decl;
using dsl::DeclKind;
using dsl::Diagnostic;
using dsl::Hint;

class LoweringError : public std::invalid_argument
{
public:
    LoweringError(const std::string& what, std::vector<Diagnostic> diags = {})
        : std::invalid_argument(what), diagnostics_(std::move(diags))
    {}
    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

// Straight-line operation inside a basic block.
struct Op
{
    enum class Kind {
        Opaque,       // text
        Prefetch,     // addr
        PrefetchAddr, // prefetch the saved _addr
        Load,         // dst = *(addr)
        Store,        // *(addr) = value
        Assign,       // dst = value
        InitVar,      // dst = value, from a declaration initializer
        SetCond,      // _cond = (value)
        SetAddr,      // _addr = (void*)(addr)
        LoadViaAddr,  // dst = *static_cast<decltype(addr)>(_addr)
        StoreViaAddr, // *static_cast<decltype(addr)>(_addr) = value
        SetResult,    // _result = value
        BindArgs,     // args[i] = exprs[i], all evaluated before any store
    };

    Kind kind;
    std::string dst;
    std::string addr;
    std::string value;
    std::vector<std::string> names;
    std::vector<std::string> exprs;

    bool operator==(const Op&) const = default;
};

struct Terminator
{
    enum class Kind { Jump, Branch, Multi, Suspend, Finish };

    Terminator() = default;
    explicit Terminator(Kind k) : kind(k) {}

    Kind kind = Kind::Finish;
    int target = -1;     // Jump, Branch-true, Suspend continuation, Multi default
    int alt = -1;        // Branch-false
    std::string cond;    // Branch condition, Multi scrutinee
    bool cond_saved = false; // Branch reads _cond instead of cond
    std::vector<std::pair<std::string, int>> cases;
    int state = -1;      // Suspend: state id of the continuation
    Hint hint = Hint::Default;

    std::vector<int> edges() const
    {
        switch (kind) {
        case Kind::Jump:
        case Kind::Suspend: return {target};
        case Kind::Branch: return {target, alt};
        case Kind::Multi: {
            std::vector<int> out;
            for (const auto& c : cases)
                out.push_back(c.second);
            out.push_back(target);
            return out;
        }
        case Kind::Finish: return {};
        }
        return {};
    }

    bool operator==(const Terminator&) const = default;
};

struct BasicBlock
{
    int id = 0;
    std::vector<Op> ops;
    Terminator term;

    bool operator==(const BasicBlock&) const = default;
};

struct Stage
{
    int id = 0;
    int entry_block = 0;
    std::vector<int> blocks; // reachable without crossing a suspension, ascending
    std::vector<int> successors; // state ids, ascending; may include finished
    std::size_t stmt_count = 0;
    Hint hint = Hint::DynamicStage; // resolved: StaticStage or DynamicStage

    bool operator==(const Stage&) const = default;
};

struct Fsm
{
    std::vector<BasicBlock> blocks;
    std::vector<Stage> states;
    int finished_id = 0;
    int entry_id = 0;
    std::vector<Diagnostic> diagnostics; // warnings only

    std::size_t yield_count() const { return states.empty() ? 0 : states.size() - 1; }

    bool operator==(const Fsm&) const = default;
};

namespace detail {

struct RawBlock
{
    std::vector<Op> ops;
    std::optional<Terminator> term;
    std::string origin; // path of the first statement placed here
    int yield_seq = -1; // program order of the Yield that ends this block
};

class Lowerer
{
public:
    explicit Lowerer(const dsl::CoroutineDef& def) : def_(def) {}

    Fsm run()
    {
        cur_ = fresh();
        std::vector<std::string> arg_names;
        for (const auto* d : def_.decls_of(DeclKind::Arg))
            arg_names.push_back(d->name);
        arg_names_ = std::move(arg_names);
        for (const auto& d : def_.decls())
            if (d.kind == DeclKind::Variable && d.init)
                emit({Op::Kind::InitVar, d.name, {}, d.init->text, {}, {}}, "decls");
        block(def_.body(), "body");
        terminate(Terminator{Terminator::Kind::Finish});
        return finish();
    }

private:
    struct Loop
    {
        int break_target;
        int continue_target; // -1 for Switch
    };

    int fresh()
    {
        raw_.emplace_back();
        return static_cast<int>(raw_.size()) - 1;
    }

    void note_origin(const std::string& path)
    {
        if (raw_[cur_].origin.empty())
            raw_[cur_].origin = path;
    }

    void emit(Op op, const std::string& path)
    {
        note_origin(path);
        raw_[cur_].ops.push_back(std::move(op));
    }

    // Ends the current block; subsequent code lands in a fresh block that is
    // only reachable if something jumps to it.
    void terminate(Terminator t)
    {
        raw_[cur_].term = std::move(t);
        cur_ = fresh();
    }

    void jump_to(int target)
    {
        Terminator t{Terminator::Kind::Jump};
        t.target = target;
        raw_[cur_].term = t;
    }

    void suspend(Hint hint, const std::string& path)
    {
        note_origin(path);
        int next = fresh();
        Terminator t{Terminator::Kind::Suspend};
        t.target = next;
        t.hint = hint;
        raw_[cur_].term = t;
        raw_[cur_].yield_seq = yield_seq_++;
        cur_ = next;
    }

    void block(const dsl::Block& b, const std::string& path)
    {
        for (const auto& d : b.decls)
            if (d.init)
                emit({Op::Kind::InitVar, d.name, {}, d.init->text, {}, {}}, path);
        for (std::size_t i = 0; i < b.stmts.size(); ++i)
            stmt(b.stmts[i], path + "[" + std::to_string(i) + "]");
    }

    void stmt(const dsl::Stmt& s, const std::string& p)
    {
        using K = Op::Kind;
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, dsl::Opaque>) {
                    emit({K::Opaque, {}, {}, n.text.text, {}, {}}, p);
                } else if constexpr (std::is_same_v<T, dsl::Block>) {
                    block(n, p + ".block");
                } else if constexpr (std::is_same_v<T, dsl::If>) {
                    note_origin(p);
                    Terminator br{Terminator::Kind::Branch};
                    if (n.yield_before_branch) {
                        emit({K::SetCond, {}, {}, n.cond.text, {}, {}}, p);
                        suspend(Hint::Default, p);
                        br.cond_saved = true;
                    } else {
                        br.cond = n.cond.text;
                    }
                    int then_b = fresh();
                    int else_b = n.else_block ? fresh() : -1;
                    int join = fresh();
                    br.target = then_b;
                    br.alt = n.else_block ? else_b : join;
                    raw_[cur_].term = br;
                    cur_ = then_b;
                    block(n.then_block, p + ".then");
                    jump_to(join);
                    if (n.else_block) {
                        cur_ = else_b;
                        block(*n.else_block, p + ".else");
                        jump_to(join);
                    }
                    cur_ = join;
                } else if constexpr (std::is_same_v<T, dsl::Switch>) {
                    note_origin(p);
                    Terminator mt{Terminator::Kind::Multi};
                    mt.cond = n.scrutinee.text;
                    std::vector<int> bodies;
                    for (std::size_t c = 0; c < n.cases.size(); ++c)
                        bodies.push_back(fresh());
                    int default_b = n.default_block ? fresh() : -1;
                    int exit = fresh();
                    for (std::size_t c = 0; c < n.cases.size(); ++c)
                        mt.cases.emplace_back(n.cases[c].label.text, bodies[c]);
                    mt.target = n.default_block ? default_b : exit;
                    raw_[cur_].term = mt;
                    int cont = loops_.empty() ? -1 : loops_.back().continue_target;
                    loops_.push_back({exit, cont});
                    for (std::size_t c = 0; c < n.cases.size(); ++c) {
                        cur_ = bodies[c];
                        block(n.cases[c].body, p + ".case" + std::to_string(c));
                        int fall = c + 1 < n.cases.size() ? bodies[c + 1]
                                                          : (n.default_block ? default_b : exit);
                        jump_to(fall);
                    }
                    if (n.default_block) {
                        cur_ = default_b;
                        block(*n.default_block, p + ".default");
                        jump_to(exit);
                    }
                    loops_.pop_back();
                    cur_ = exit;
                } else if constexpr (std::is_same_v<T, dsl::While>) {
                    note_origin(p);
                    int head = fresh();
                    int body = fresh();
                    int exit = fresh();
                    jump_to(head);
                    Terminator br{Terminator::Kind::Branch};
                    br.cond = n.cond.text;
                    br.target = body;
                    br.alt = exit;
                    raw_[head].term = br;
                    loops_.push_back({exit, head});
                    cur_ = body;
                    block(n.body, p + ".do");
                    jump_to(head);
                    loops_.pop_back();
                    cur_ = exit;
                } else if constexpr (std::is_same_v<T, dsl::DoWhile>) {
                    note_origin(p);
                    int body = fresh();
                    int check = fresh();
                    int exit = fresh();
                    jump_to(body);
                    loops_.push_back({exit, check});
                    cur_ = body;
                    block(n.body, p + ".do");
                    jump_to(check);
                    loops_.pop_back();
                    Terminator br{Terminator::Kind::Branch};
                    br.cond = n.cond.text;
                    br.target = body;
                    br.alt = exit;
                    raw_[check].term = br;
                    cur_ = exit;
                } else if constexpr (std::is_same_v<T, dsl::Break>) {
                    note_origin(p);
                    jump_to(loops_.back().break_target);
                    cur_ = fresh();
                } else if constexpr (std::is_same_v<T, dsl::Continue>) {
                    note_origin(p);
                    auto it = std::find_if(loops_.rbegin(), loops_.rend(),
                                           [](const Loop& l) { return l.continue_target >= 0; });
                    jump_to(it->continue_target);
                    cur_ = fresh();
                } else if constexpr (std::is_same_v<T, dsl::Return>) {
                    if (n.value)
                        emit({K::SetResult, {}, {}, n.value->text, {}, {}}, p);
                    note_origin(p);
                    terminate(Terminator{Terminator::Kind::Finish});
                } else if constexpr (std::is_same_v<T, dsl::Yield>) {
                    suspend(n.hint, p);
                } else if constexpr (std::is_same_v<T, dsl::Prefetch>) {
                    for (const auto& a : n.addrs)
                        emit({K::Prefetch, {}, a.text, {}, {}, {}}, p);
                } else if constexpr (std::is_same_v<T, dsl::Load>) {
                    if (n.yield_before_use) {
                        emit({K::SetAddr, {}, n.addr.text, {}, {}, {}}, p);
                        emit({K::PrefetchAddr, {}, {}, {}, {}, {}}, p);
                        suspend(Hint::Default, p);
                        emit({K::LoadViaAddr, n.dst, n.addr.text, {}, {}, {}}, p);
                    } else {
                        emit({K::Load, n.dst, n.addr.text, {}, {}, {}}, p);
                    }
                } else if constexpr (std::is_same_v<T, dsl::Store>) {
                    if (n.yield_before_use) {
                        emit({K::SetAddr, {}, n.addr.text, {}, {}, {}}, p);
                        emit({K::PrefetchAddr, {}, {}, {}, {}, {}}, p);
                        suspend(Hint::Default, p);
                        emit({K::StoreViaAddr, {}, n.addr.text, n.value.text, {}, {}}, p);
                    } else {
                        emit({K::Store, {}, n.addr.text, n.value.text, {}, {}}, p);
                    }
                } else if constexpr (std::is_same_v<T, dsl::Assign>) {
                    emit({K::Assign, n.dst, {}, n.value.text, {}, {}}, p);
                } else if constexpr (std::is_same_v<T, dsl::Call>) {
                    std::vector<std::string> exprs;
                    for (const auto& a : n.args)
                        exprs.push_back(a.text);
                    emit({K::BindArgs, {}, {}, {}, arg_names_, std::move(exprs)}, p);
                    jump_to(0);
                    cur_ = fresh();
                }
            },
            s.node);
    }

    Hint resolve(Hint h) const
    {
        if (h != Hint::Default)
            return h;
        return def_.schedule() == Hint::StaticStage ? Hint::StaticStage : Hint::DynamicStage;
    }

    Fsm finish()
    {
        // Reachability over every edge, including suspensions.
        std::vector<bool> live(raw_.size(), false);
        std::vector<int> work{0};
        live[0] = true;
        while (!work.empty()) {
            int b = work.back();
            work.pop_back();
            const auto& t = *raw_[b].term;
            for (int e : t.edges())
                if (!live[e]) {
                    live[e] = true;
                    work.push_back(e);
                }
        }

        Fsm fsm;
        std::set<std::string> warned;
        for (std::size_t i = 0; i < raw_.size(); ++i) {
            if (live[i])
                continue;
            const auto& rb = raw_[i];
            bool has_code = !rb.ops.empty() || rb.yield_seq >= 0;
            if (has_code && warned.insert(rb.origin).second)
                fsm.diagnostics.push_back({"W-unreachable", rb.origin,
                                           "unreachable code dropped", dsl::Severity::Warning});
        }

        std::vector<int> renumber(raw_.size(), -1);
        for (std::size_t i = 0; i < raw_.size(); ++i)
            if (live[i])
                renumber[i] = static_cast<int>(fsm.blocks.size()),
                fsm.blocks.push_back({renumber[i], raw_[i].ops, *raw_[i].term});

        // States in program order of their Yield.
        std::vector<std::pair<int, int>> yields; // (seq, new block id)
        for (std::size_t i = 0; i < raw_.size(); ++i)
            if (live[i] && raw_[i].yield_seq >= 0)
                yields.emplace_back(raw_[i].yield_seq, renumber[i]);
        std::sort(yields.begin(), yields.end());

        auto fix = [&](int& b) { if (b >= 0) b = renumber[b]; };
        for (auto& bb : fsm.blocks) {
            fix(bb.term.target);
            fix(bb.term.alt);
            for (auto& c : bb.term.cases)
                fix(c.second);
        }

        std::vector<int> state_entry{0};
        for (std::size_t s = 0; s < yields.size(); ++s) {
            auto& t = fsm.blocks[yields[s].second].term;
            t.state = static_cast<int>(s) + 1;
            state_entry.push_back(t.target);
        }
        fsm.finished_id = static_cast<int>(state_entry.size());

        for (std::size_t s = 0; s < state_entry.size(); ++s) {
            Stage st;
            st.id = static_cast<int>(s);
            st.entry_block = state_entry[s];
            std::set<int> seen{st.entry_block};
            std::vector<int> stack{st.entry_block};
            std::set<int> succ;
            std::set<Hint> exit_hints;
            while (!stack.empty()) {
                int b = stack.back();
                stack.pop_back();
                const auto& t = fsm.blocks[b].term;
                if (t.kind == Terminator::Kind::Suspend) {
                    succ.insert(t.state);
                    exit_hints.insert(resolve(t.hint));
                    continue;
                }
                if (t.kind == Terminator::Kind::Finish) {
                    succ.insert(fsm.finished_id);
                    exit_hints.insert(resolve(Hint::Default));
                    continue;
                }
                for (int e : t.edges())
                    if (seen.insert(e).second)
                        stack.push_back(e);
            }
            st.blocks.assign(seen.begin(), seen.end());
            st.successors.assign(succ.begin(), succ.end());
            for (int b : st.blocks)
                st.stmt_count += fsm.blocks[b].ops.size();
            st.hint = exit_hints.size() == 1 ? *exit_hints.begin() : Hint::DynamicStage;
            fsm.states.push_back(std::move(st));
        }
        return fsm;
    }

    const dsl::CoroutineDef& def_;
    std::vector<RawBlock> raw_;
    std::vector<Loop> loops_;
    std::vector<std::string> arg_names_;
    int cur_ = 0;
    int yield_seq_ = 0;
};

} // namespace detail

// Requires validate(def) to be empty; throws LoweringError otherwise.
inline Fsm split_stages(const dsl::CoroutineDef& def)
{
    auto diags = dsl::validate(def);
    if (dsl::has_errors(diags))
        throw LoweringError("coroutine '" + def.name() + "' does not validate", std::move(diags));
    return detail::Lowerer(def).run();
}

// Every stage has exactly one successor, the next state.
inline bool is_straight_line(const Fsm& fsm)
{
    for (const auto& st : fsm.states)
        if (st.successors != std::vector<int>{st.id + 1})
            return false;
    return true;
}

// Number of leading stages that are hinted static and form a straight line.
inline std::size_t static_prefix_length(const Fsm& fsm)
{
    std::size_t n = 0;
    for (const auto& st : fsm.states) {
        if (st.hint != Hint::StaticStage || st.successors != std::vector<int>{st.id + 1})
            break;
        ++n;
    }
    return n;
}

// `state <id>: [<n> stmts] -> <successor ids>`, one line per state.
inline std::string dump(const Fsm& fsm)
{
    std::ostringstream out;
    for (const auto& st : fsm.states) {
        out << "state " << st.id << ": [" << st.stmt_count << " stmts] ->";
        for (int s : st.successors)
            out << ' ' << s;
        out << '\n';
    }
    return out.str();
}

// ---- context --------------------------------------------------------------

struct ContextSpec
{
    std::string name;
    std::optional<dsl::TypeText> result_type;
    std::vector<Decl> args;
    std::vector<Decl> shared_args;
    std::vector<Decl> vars; // top-level first, then block locals in program order
    bool has_state = false;
    bool has_result = false;
    bool has_cond = false;
    bool has_addr = false;

    std::set<std::string> internal() const
    {
        std::set<std::string> out;
        if (has_state) out.insert("_state");
        if (has_result) out.insert("_result");
        if (has_cond) out.insert("_cond");
        if (has_addr) out.insert("_addr");
        return out;
    }

    bool operator==(const ContextSpec&) const = default;
};

inline ContextSpec compute_context(const dsl::CoroutineDef& def, const Fsm& fsm)
{
    ContextSpec ctx;
    ctx.name = def.name();
    for (const auto& d : def.decls()) {
        switch (d.kind) {
        case DeclKind::Arg: ctx.args.push_back(d); break;
        case DeclKind::SharedArg: ctx.shared_args.push_back(d); break;
        case DeclKind::Variable: ctx.vars.push_back(d); break;
        case DeclKind::Result: ctx.result_type = d.type; break;
        }
    }
    auto collect = [&](const dsl::Block& b) {
        for (const auto& d : b.decls)
            ctx.vars.push_back(d);
    };
    collect(def.body());
    dsl::for_each_stmt(def.body(), [&](const dsl::Stmt& s) {
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, dsl::Block>) {
                    collect(n);
                } else if constexpr (std::is_same_v<T, dsl::If>) {
                    collect(n.then_block);
                    if (n.else_block)
                        collect(*n.else_block);
                } else if constexpr (std::is_same_v<T, dsl::Switch>) {
                    for (const auto& c : n.cases)
                        collect(c.body);
                    if (n.default_block)
                        collect(*n.default_block);
                } else if constexpr (std::is_same_v<T, dsl::While> ||
                                     std::is_same_v<T, dsl::DoWhile>) {
                    collect(n.body);
                }
            },
            s.node);
    });

    ctx.has_result = ctx.result_type && ctx.result_type->text != "void";
    if (fsm.yield_count() > 0) {
        bool whole_dynamic = def.schedule() != Hint::StaticStage;
        bool any_dynamic = std::any_of(fsm.states.begin(), fsm.states.end(), [](const Stage& s) {
            return s.hint == Hint::DynamicStage;
        });
        ctx.has_state = whole_dynamic || any_dynamic;
    }
    for (const auto& bb : fsm.blocks) {
        if (bb.term.kind == Terminator::Kind::Branch && bb.term.cond_saved)
            ctx.has_cond = true;
        for (const auto& op : bb.ops)
            if (op.kind == Op::Kind::SetAddr)
                ctx.has_addr = true;
    }
    return ctx;
}

// ---- baseline -------------------------------------------------------------

namespace detail {

inline dsl::Block strip_block(const dsl::Block& b);

inline std::optional<dsl::Stmt> strip_stmt(const dsl::Stmt& s)
{
    return std::visit(
        [](const auto& n) -> std::optional<dsl::Stmt> {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, dsl::Yield> || std::is_same_v<T, dsl::Prefetch>) {
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, dsl::Block>) {
                return strip_block(n);
            } else if constexpr (std::is_same_v<T, dsl::If>) {
                dsl::If out{n.cond, strip_block(n.then_block), std::nullopt, false};
                if (n.else_block)
                    out.else_block = strip_block(*n.else_block);
                return out;
            } else if constexpr (std::is_same_v<T, dsl::Switch>) {
                dsl::Switch out{n.scrutinee, {}, std::nullopt};
                for (const auto& c : n.cases)
                    out.cases.push_back({c.label, strip_block(c.body)});
                if (n.default_block)
                    out.default_block = strip_block(*n.default_block);
                return out;
            } else if constexpr (std::is_same_v<T, dsl::While>) {
                return dsl::While{n.cond, strip_block(n.body)};
            } else if constexpr (std::is_same_v<T, dsl::DoWhile>) {
                return dsl::DoWhile{strip_block(n.body), n.cond};
            } else if constexpr (std::is_same_v<T, dsl::Load>) {
                return dsl::Assign{n.dst, "*(" + n.addr.text + ")"};
            } else if constexpr (std::is_same_v<T, dsl::Store>) {
                return dsl::Opaque{"*(" + n.addr.text + ") = (" + n.value.text + ");"};
            } else {
                return n;
            }
        },
        s.node);
}

inline dsl::Block strip_block(const dsl::Block& b)
{
    dsl::Block out;
    out.decls = b.decls;
    for (const auto& s : b.stmts)
        if (auto r = strip_stmt(s))
            out.stmts.push_back(std::move(*r));
    return out;
}

} // namespace detail

// Same tree without Yield or Prefetch; Load/Store become plain assignments.
inline dsl::CoroutineDef strip_yields(const dsl::CoroutineDef& def)
{
    dsl::CoroutineDef out(def.name());
    for (const auto& d : def.decls())
        out.add_decl(d);
    out.Schedule(def.schedule());
    out.body() = detail::strip_block(def.body());
    return out;
}

} // namespace coil::lower

#endif // COIL_LOWERING_HPP
