// codegen.hpp
// Emits C++ source for lowered coroutines:
//
//   emit_routine  - the definition with suspension points removed; the
//                   baseline every interleaved variant must agree with
//   emit_dynamic  - CoroutineState_<name>: one context per instance with
//                   Step()/Done()/Reset()/Result()
//   emit_static   - CoroutineState_<name>_<w>: SoA contexts for w instances
//                   where SuperStep() runs each stage as a w-trip loop
//   emit_hybrid   - CoroutineState_<name>_hybrid_<w>: fused loops for the
//                   leading static stages, per-slot Step(i) for the rest
//
// Generated code includes nothing. It is a fragment meant to be included
// where the names used by the opaque text (types, helper functions and the
// prefetch function) are visible, typically inside a namespace.

#ifndef COIL_CODEGEN_HPP
#define COIL_CODEGEN_HPP

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coil/dsl.hpp"
#include "coil/lowering.hpp"

namespace coil::codegen {

inline constexpr const char* kToolVersion = "0.1.0";

using lower::ContextSpec;
using lower::Fsm;

class CodegenError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

struct SourceText
{
    std::string header; // provenance banner
    std::string text;

    std::string str() const { return header + text; }
    bool operator==(const SourceText&) const = default;
};

enum class LayoutKind { AoS, SoA };

struct Layout
{
    LayoutKind kind = LayoutKind::AoS;
    int width = 1; // SoA only
};

struct Options
{
    std::string prefetch_fn = "prefetch";
};

inline std::string banner(const std::string& def_name)
{
    return "// Do not edit by hand.\n"
           "// Automatically generated by coil-gen " +
           std::string(kToolVersion) + " from coroutine " + def_name +
           ".\n"
           "// Include where the types and helpers named in the opaque text are "
           "visible.\n";
}

inline std::string dynamic_name(const std::string& def) { return "CoroutineState_" + def; }
inline std::string static_name(const std::string& def, int w)
{
    return "CoroutineState_" + def + "_" + std::to_string(w);
}
inline std::string hybrid_name(const std::string& def, int w)
{
    return "CoroutineState_" + def + "_hybrid_" + std::to_string(w);
}

namespace detail {

class Out
{
public:
    Out& line(int depth, const std::string& s)
    {
        os_ << std::string(static_cast<std::size_t>(depth) * 2, ' ') << s << '\n';
        return *this;
    }
    // Multi-line opaque text goes out verbatim after the first indent.
    Out& verbatim(int depth, const std::string& s)
    {
        os_ << std::string(static_cast<std::size_t>(depth) * 2, ' ') << s;
        if (s.empty() || s.back() != '\n')
            os_ << '\n';
        return *this;
    }
    std::string str() const { return os_.str(); }

private:
    std::ostringstream os_;
};

inline std::string result_type(const ContextSpec& ctx)
{
    return ctx.has_result ? ctx.result_type->text : "void";
}

// How generated code spells the internal fields.
struct Naming
{
    bool soa = false;

    std::string field(const char* name) const
    {
        return soa ? std::string(name) + "[_i]" : std::string(name);
    }
};

struct EmitEnv
{
    const ContextSpec& ctx;
    const Options& opt;
    Naming naming;
};

inline void emit_op(Out& out, int d, const lower::Op& op, const EmitEnv& env)
{
    using K = lower::Op::Kind;
    const auto& n = env.naming;
    switch (op.kind) {
    case K::Opaque: out.verbatim(d, op.value); break;
    case K::Prefetch: out.line(d, env.opt.prefetch_fn + "(" + op.addr + ");"); break;
    case K::PrefetchAddr: out.line(d, env.opt.prefetch_fn + "(" + n.field("_addr") + ");"); break;
    case K::Load: out.line(d, op.dst + " = *(" + op.addr + ");"); break;
    case K::Store: out.line(d, "*(" + op.addr + ") = (" + op.value + ");"); break;
    case K::Assign:
    case K::InitVar: out.line(d, op.dst + " = " + op.value + ";"); break;
    case K::SetCond: out.line(d, n.field("_cond") + " = static_cast<bool>(" + op.value + ");"); break;
    case K::SetAddr:
        out.line(d, n.field("_addr") + " = const_cast<void*>(static_cast<const void*>(" + op.addr +
                        "));");
        break;
    case K::LoadViaAddr:
        out.line(d, op.dst + " = *static_cast<std::remove_reference_t<decltype(" + op.addr + ")>>(" +
                        n.field("_addr") + ");");
        break;
    case K::StoreViaAddr:
        out.line(d, "*static_cast<std::remove_reference_t<decltype(" + op.addr + ")>>(" +
                        n.field("_addr") + ") = (" + op.value + ");");
        break;
    case K::SetResult:
        if (env.ctx.has_result)
            out.line(d, n.field("_result") + " = " + op.value + ";");
        else
            out.line(d, "static_cast<void>(" + op.value + ");");
        break;
    case K::BindArgs: {
        out.line(d, "{");
        for (std::size_t i = 0; i < op.exprs.size(); ++i)
            out.line(d + 1, "auto _a" + std::to_string(i) + " = (" + op.exprs[i] + ");");
        for (std::size_t i = 0; i < op.names.size(); ++i)
            out.line(d + 1, op.names[i] + " = _a" + std::to_string(i) + ";");
        out.line(d, "}");
        break;
    }
    }
}

// Emits `for (;;) switch (_bb)` over the given blocks. Suspend and Finish
// are rendered by the callbacks; the remaining terminators set _bb.
template <typename OnSuspend, typename OnFinish>
void emit_dispatch(Out& out, int d, const Fsm& fsm, const std::vector<int>& blocks,
                   const EmitEnv& env, OnSuspend&& on_suspend, OnFinish&& on_finish)
{
    using TK = lower::Terminator::Kind;
    out.line(d, "for (;;) {");
    out.line(d + 1, "switch (_bb) {");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& bb = fsm.blocks[static_cast<std::size_t>(blocks[i])];
        int next = i + 1 < blocks.size() ? blocks[i + 1] : -1;
        out.line(d + 1, "case " + std::to_string(bb.id) + ": {");
        for (const auto& op : bb.ops)
            emit_op(out, d + 2, op, env);
        const auto& t = bb.term;
        switch (t.kind) {
        case TK::Jump:
            if (t.target == next) {
                out.line(d + 1, "}");
                out.line(d + 1, "  [[fallthrough]];");
                continue;
            }
            out.line(d + 2, "_bb = " + std::to_string(t.target) + ";");
            out.line(d + 2, "continue;");
            break;
        case TK::Branch: {
            std::string cond = t.cond_saved ? env.naming.field("_cond") : t.cond;
            out.line(d + 2, "if (" + cond + ") {");
            out.line(d + 3, "_bb = " + std::to_string(t.target) + ";");
            out.line(d + 2, "} else {");
            out.line(d + 3, "_bb = " + std::to_string(t.alt) + ";");
            out.line(d + 2, "}");
            out.line(d + 2, "continue;");
            break;
        }
        case TK::Multi:
            out.line(d + 2, "switch (" + t.cond + ") {");
            for (const auto& c : t.cases)
                out.line(d + 2, "case " + c.first + ": _bb = " + std::to_string(c.second) +
                                    "; break;");
            out.line(d + 2, "default: _bb = " + std::to_string(t.target) + "; break;");
            out.line(d + 2, "}");
            out.line(d + 2, "continue;");
            break;
        case TK::Suspend: on_suspend(d + 2, t); break;
        case TK::Finish: on_finish(d + 2); break;
        }
        out.line(d + 1, "}");
    }
    out.line(d + 1, "}");
    out.line(d, "}");
}

// Blocks of one stage in the order a straight chain visits them, or empty
// if the stage branches internally.
inline std::vector<int> stage_chain(const Fsm& fsm, const lower::Stage& st)
{
    using TK = lower::Terminator::Kind;
    std::vector<int> chain;
    int b = st.entry_block;
    while (true) {
        if (std::find(chain.begin(), chain.end(), b) != chain.end())
            return {};
        chain.push_back(b);
        const auto& t = fsm.blocks[static_cast<std::size_t>(b)].term;
        if (t.kind == TK::Suspend || t.kind == TK::Finish)
            break;
        if (t.kind != TK::Jump)
            return {};
        b = t.target;
    }
    return chain.size() == st.blocks.size() ? chain : std::vector<int>{};
}

// Body of one fused stage loop iteration for slot _i.
inline void emit_stage_body(Out& out, int d, const Fsm& fsm, const lower::Stage& st,
                            const EmitEnv& env)
{
    auto chain = stage_chain(fsm, st);
    if (!chain.empty()) {
        for (int b : chain)
            for (const auto& op : fsm.blocks[static_cast<std::size_t>(b)].ops)
                emit_op(out, d, op, env);
        return;
    }
    std::string done = "_stage" + std::to_string(st.id) + "_end";
    out.line(d, "int _bb = " + std::to_string(st.entry_block) + ";");
    emit_dispatch(
        out, d, fsm, st.blocks, env,
        [&](int dd, const lower::Terminator&) { out.line(dd, "goto " + done + ";"); },
        [&](int dd) { out.line(dd, "goto " + done + ";"); });
    out.line(d - 1, done + ":;");
}

inline void emit_shared_struct(Out& out, int d, const ContextSpec& ctx)
{
    if (ctx.shared_args.empty())
        return;
    out.line(d, "struct Shared {");
    for (const auto& s : ctx.shared_args)
        out.line(d + 1, s.type.text + " " + s.name + "{};");
    out.line(d, "};");
}

inline void emit_shared_aliases(Out& out, int d, const ContextSpec& ctx, const std::string& base)
{
    for (const auto& s : ctx.shared_args)
        out.line(d, "[[maybe_unused]] const auto& " + s.name + " = " + base + s.name + ";");
}

inline void emit_soa_aliases(Out& out, int d, const ContextSpec& ctx)
{
    for (const auto& a : ctx.args)
        out.line(d, "[[maybe_unused]] " + a.type.text + "& " + a.name + " = _soa_" + a.name +
                        "[_i];");
    for (const auto& v : ctx.vars)
        out.line(d, "[[maybe_unused]] " + v.type.text + "& " + v.name + " = _soa_" + v.name +
                        "[_i];");
}

inline void emit_aos_fields(Out& out, int d, const ContextSpec& ctx, bool force_state)
{
    for (const auto& a : ctx.args)
        out.line(d, a.type.text + " " + a.name + "{}; // Arg");
    for (const auto& v : ctx.vars)
        out.line(d, v.type.text + " " + v.name + "{}; // Variable");
    if (ctx.has_state || force_state)
        out.line(d, "int _state = 0; // for dynamic Yield");
    if (ctx.has_result)
        out.line(d, ctx.result_type->text + " _result{}; // for Return");
    if (ctx.has_cond)
        out.line(d, "bool _cond = false; // for If");
    if (ctx.has_addr)
        out.line(d, "void* _addr = nullptr; // for Load/Store");
}

inline void emit_soa_fields(Out& out, int d, const ContextSpec& ctx, int width, bool force_state)
{
    std::string w = width > 0 ? "[" + std::to_string(width) + "]{}" : "[_Width]{}";
    if (ctx.has_state || force_state)
        out.line(d, "int _state" + w + ";");
    if (ctx.has_result)
        out.line(d, ctx.result_type->text + " _result" + w + ";");
    if (ctx.has_cond)
        out.line(d, "bool _cond" + w + ";");
    if (ctx.has_addr)
        out.line(d, "void* _addr" + w + ";");
    for (const auto& a : ctx.args)
        out.line(d, a.type.text + " _soa_" + a.name + w + ";");
    for (const auto& v : ctx.vars)
        out.line(d, v.type.text + " _soa_" + v.name + w + ";");
}

inline std::string soa_init_params(const ContextSpec& ctx)
{
    std::string p;
    if (!ctx.shared_args.empty())
        p += "const Shared& shared";
    for (const auto& a : ctx.args) {
        if (!p.empty())
            p += ", ";
        p += a.type.text + " const* " + a.name;
    }
    return p;
}

inline void emit_soa_init(Out& out, int d, const ContextSpec& ctx, bool state)
{
    out.line(d, "void Init(" + soa_init_params(ctx) + ") {");
    if (!ctx.shared_args.empty())
        out.line(d + 1, "_shared = shared;");
    out.line(d + 1, "for (int _i = 0; _i < _Width; _i++) {");
    for (const auto& a : ctx.args)
        out.line(d + 2, "_soa_" + a.name + "[_i] = " + a.name + "[_i];");
    if (state)
        out.line(d + 2, "_state[_i] = 0;");
    out.line(d + 1, "}");
    out.line(d, "}");
}

inline void emit_soa_fini(Out& out, int d, const ContextSpec& ctx)
{
    if (!ctx.has_result)
        return;
    out.line(d, "void Fini(" + ctx.result_type->text + "* out) const {");
    out.line(d + 1, "for (int _i = 0; _i < _Width; _i++) {");
    out.line(d + 2, "out[_i] = _result[_i];");
    out.line(d + 1, "}");
    out.line(d, "}");
}

inline void emit_fused_stage(Out& out, int d, const Fsm& fsm, const lower::Stage& st,
                             const EmitEnv& env)
{
    out.line(d, "for (int _i = 0; _i < _Width; _i++) {");
    emit_soa_aliases(out, d + 1, env.ctx);
    emit_stage_body(out, d + 1, fsm, st, env);
    out.line(d, "}");
}

// Shared by the AoS Step() and the hybrid Step(_i).
inline void emit_step_body(Out& out, int d, const Fsm& fsm, const EmitEnv& env)
{
    const auto& state = env.naming.field("_state");
    std::vector<int> all;
    for (const auto& bb : fsm.blocks)
        all.push_back(bb.id);
    out.line(d, "int _bb;");
    out.line(d, "switch (" + state + ") {");
    for (const auto& st : fsm.states)
        out.line(d, "case " + std::to_string(st.id) + ": _bb = " + std::to_string(st.entry_block) +
                        "; break;");
    out.line(d, "default: return true;");
    out.line(d, "}");
    emit_dispatch(
        out, d, fsm, all, env,
        [&](int dd, const lower::Terminator& t) {
            out.line(dd, state + " = " + std::to_string(t.state) + ";");
            out.line(dd, "return false;");
        },
        [&](int dd) {
            out.line(dd, state + " = _Finished;");
            out.line(dd, "return true;");
        });
}

inline void emit_structured_block(Out& out, int d, const dsl::Block& b, const EmitEnv& env,
                                  bool has_call);

inline bool ends_in_jump(const dsl::Block& b)
{
    if (b.stmts.empty())
        return false;
    const auto& s = b.stmts.back();
    return s.is<dsl::Break>() || s.is<dsl::Continue>() || s.is<dsl::Return>() ||
           s.is<dsl::Call>();
}

inline void emit_structured_stmt(Out& out, int d, const dsl::Stmt& s, const EmitEnv& env,
                                 bool has_call)
{
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, dsl::Opaque>) {
                out.verbatim(d, n.text.text);
            } else if constexpr (std::is_same_v<T, dsl::Block>) {
                out.line(d, "{");
                emit_structured_block(out, d + 1, n, env, has_call);
                out.line(d, "}");
            } else if constexpr (std::is_same_v<T, dsl::If>) {
                out.line(d, "if (" + n.cond.text + ") {");
                emit_structured_block(out, d + 1, n.then_block, env, has_call);
                if (n.else_block) {
                    out.line(d, "} else {");
                    emit_structured_block(out, d + 1, *n.else_block, env, has_call);
                }
                out.line(d, "}");
            } else if constexpr (std::is_same_v<T, dsl::Switch>) {
                out.line(d, "switch (" + n.scrutinee.text + ") {");
                for (std::size_t c = 0; c < n.cases.size(); ++c) {
                    out.line(d, "case " + n.cases[c].label.text + ": {");
                    emit_structured_block(out, d + 1, n.cases[c].body, env, has_call);
                    out.line(d, "}");
                    bool more = c + 1 < n.cases.size() || n.default_block;
                    if (more && !ends_in_jump(n.cases[c].body))
                        out.line(d + 1, "[[fallthrough]];");
                }
                if (n.default_block) {
                    out.line(d, "default: {");
                    emit_structured_block(out, d + 1, *n.default_block, env, has_call);
                    out.line(d, "}");
                }
                out.line(d, "}");
            } else if constexpr (std::is_same_v<T, dsl::While>) {
                out.line(d, "while (" + n.cond.text + ") {");
                emit_structured_block(out, d + 1, n.body, env, has_call);
                out.line(d, "}");
            } else if constexpr (std::is_same_v<T, dsl::DoWhile>) {
                out.line(d, "do {");
                emit_structured_block(out, d + 1, n.body, env, has_call);
                out.line(d, "} while (" + n.cond.text + ");");
            } else if constexpr (std::is_same_v<T, dsl::Break>) {
                out.line(d, "break;");
            } else if constexpr (std::is_same_v<T, dsl::Continue>) {
                out.line(d, "continue;");
            } else if constexpr (std::is_same_v<T, dsl::Return>) {
                if (!n.value)
                    out.line(d, env.ctx.has_result ? "return {};" : "return;");
                else if (env.ctx.has_result)
                    out.line(d, "return " + n.value->text + ";");
                else
                    out.line(d, "return static_cast<void>(" + n.value->text + ");");
            } else if constexpr (std::is_same_v<T, dsl::Assign>) {
                out.line(d, n.dst + " = " + n.value.text + ";");
            } else if constexpr (std::is_same_v<T, dsl::Load>) {
                out.line(d, n.dst + " = *(" + n.addr.text + ");");
            } else if constexpr (std::is_same_v<T, dsl::Store>) {
                out.line(d, "*(" + n.addr.text + ") = (" + n.value.text + ");");
            } else if constexpr (std::is_same_v<T, dsl::Call>) {
                out.line(d, "{");
                for (std::size_t i = 0; i < n.args.size(); ++i)
                    out.line(d + 1, "auto _a" + std::to_string(i) + " = (" + n.args[i].text + ");");
                for (std::size_t i = 0; i < env.ctx.args.size(); ++i)
                    out.line(d + 1, env.ctx.args[i].name + " = _a" + std::to_string(i) + ";");
                out.line(d, "}");
                out.line(d, "goto _entry;");
            } else {
                // Yield and Prefetch never reach here: the tree is stripped.
                static_assert(std::is_same_v<T, dsl::Yield> || std::is_same_v<T, dsl::Prefetch>);
            }
        },
        s.node);
    (void)has_call;
}

inline void emit_structured_block(Out& out, int d, const dsl::Block& b, const EmitEnv& env,
                                  bool has_call)
{
    for (const auto& decl : b.decls)
        if (decl.init)
            out.line(d, decl.name + " = " + decl.init->text + ";");
    for (const auto& s : b.stmts)
        emit_structured_stmt(out, d, s, env, has_call);
}

inline bool contains_call(const dsl::Block& b)
{
    bool found = false;
    dsl::for_each_stmt(b, [&](const dsl::Stmt& s) { found = found || s.is<dsl::Call>(); });
    return found;
}

} // namespace detail

// Context record only: AoS is one struct per instance, SoA one struct per
// batch with a width-length array per field.
inline SourceText emit_context(const ContextSpec& ctx, Layout layout)
{
    detail::Out out;
    if (layout.kind == LayoutKind::AoS) {
        out.line(0, "struct " + ctx.name + "_Context_AoS {");
        detail::emit_aos_fields(out, 1, ctx, false);
        out.line(0, "};");
    } else {
        if (layout.width < 1)
            throw CodegenError("SoA width must be at least 1, got " + std::to_string(layout.width));
        out.line(0, "struct " + ctx.name + "_Context_SoA_" + std::to_string(layout.width) + " {");
        detail::emit_soa_fields(out, 1, ctx, layout.width, false);
        out.line(0, "};");
    }
    return {banner(ctx.name), out.str()};
}

inline SourceText emit_routine(const dsl::CoroutineDef& def, const Options& opt = {})
{
    auto stripped = lower::strip_yields(def);
    auto diags = dsl::validate(stripped);
    if (dsl::has_errors(diags))
        throw CodegenError("coroutine '" + def.name() + "' does not validate");
    // Context of the stripped tree: only names and types are needed.
    lower::Fsm none;
    auto ctx = lower::compute_context(stripped, none);
    detail::EmitEnv env{ctx, opt, {}};
    detail::Out out;
    std::string params;
    for (const auto& s : ctx.shared_args)
        params += (params.empty() ? "" : ", ") + s.type.text + " " + s.name;
    for (const auto& a : ctx.args)
        params += (params.empty() ? "" : ", ") + a.type.text + " " + a.name;
    out.line(0, "// Original " + def.name());
    out.line(0, "inline " + detail::result_type(ctx) + " " + def.name() + "(" + params + ") {");
    for (const auto& v : ctx.vars)
        out.line(1, v.type.text + " " + v.name + "{};");
    bool has_call = detail::contains_call(stripped.body());
    if (has_call)
        out.line(0, "_entry:;");
    for (const auto& v : ctx.vars) {
        // Top-level initializers only; block-local ones run at block entry.
        if (v.init && def.find(v.name))
            out.line(1, v.name + " = " + v.init->text + ";");
    }
    detail::emit_structured_block(out, 1, stripped.body(), env, has_call);
    out.line(0, "}");
    return {banner(def.name()), out.str()};
}

inline SourceText emit_dynamic(const dsl::CoroutineDef& def, const Fsm& fsm,
                               const ContextSpec& ctx, const Options& opt = {})
{
    detail::EmitEnv env{ctx, opt, {false}};
    detail::Out out;
    std::string name = dynamic_name(def.name());
    out.line(0, "// Coroutine state for " + def.name());
    out.line(0, "struct " + name + " {");
    detail::emit_shared_struct(out, 1, ctx);
    out.line(1, name + "() = default;");
    std::string params;
    std::string inits;
    if (!ctx.shared_args.empty()) {
        params = "const Shared* shared";
        inits = "_shared(shared)";
    }
    for (const auto& a : ctx.args) {
        params += (params.empty() ? "" : ", ") + a.type.text + " " + a.name;
        inits += (inits.empty() ? "" : ", ") + a.name + "(" + a.name + ")";
    }
    if (!params.empty())
        out.line(1, std::string(ctx.args.size() + ctx.shared_args.size() == 1 ? "explicit " : "") +
                        name + "(" + params + ") : " + inits + " {}");
    if (!ctx.shared_args.empty())
        out.line(1, "const Shared* _shared = nullptr;");
    detail::emit_aos_fields(out, 1, ctx, true);
    out.line(1, "bool Done() const { return _state == _Finished; }");
    out.line(1, "void Reset() { _state = 0; }");
    if (ctx.has_result)
        out.line(1, ctx.result_type->text + " Result() const { return _result; }");
    out.line(1, "bool Step() {");
    if (!ctx.shared_args.empty())
        detail::emit_shared_aliases(out, 2, ctx, "_shared->");
    detail::emit_step_body(out, 2, fsm, env);
    out.line(1, "}");
    out.line(1, "static constexpr int InitialState = 0;");
    out.line(1, "static constexpr int _Finished = " + std::to_string(fsm.finished_id) + ";");
    out.line(0, "};");
    return {banner(def.name()), out.str()};
}

// Requires a straight-line FSM: every stage has the next state as its only
// successor.
inline SourceText emit_static(const dsl::CoroutineDef& def, const Fsm& fsm,
                              const ContextSpec& ctx, int width, const Options& opt = {})
{
    if (width < 1)
        throw CodegenError("static width must be at least 1, got " + std::to_string(width));
    if (!lower::is_straight_line(fsm))
        throw CodegenError("coroutine '" + def.name() +
                           "' has data-dependent transitions across yields; use the dynamic or "
                           "hybrid schedule");
    detail::EmitEnv env{ctx, opt, {true}};
    detail::Out out;
    std::string name = static_name(def.name(), width);
    out.line(0, "// Coroutine SoA state for " + def.name() + " x " + std::to_string(width));
    out.line(0, "template <int _Width = " + std::to_string(width) + ">");
    out.line(0, "struct " + name + " {");
    out.line(1, "static constexpr int Width = _Width;");
    detail::emit_shared_struct(out, 1, ctx);
    if (!ctx.shared_args.empty())
        out.line(1, "Shared _shared{};");
    detail::emit_soa_fields(out, 1, ctx, 0, false);
    detail::emit_soa_init(out, 1, ctx, ctx.has_state);
    out.line(1, "bool SuperStep() {");
    detail::emit_shared_aliases(out, 2, ctx, "_shared.");
    for (const auto& st : fsm.states)
        detail::emit_fused_stage(out, 2, fsm, st, env);
    out.line(2, "return true;");
    out.line(1, "}");
    detail::emit_soa_fini(out, 1, ctx);
    out.line(0, "};");
    out.line(0, "// End of batched " + def.name());
    return {banner(def.name()), out.str()};
}

// Leading stages hinted static run fused over all slots in Prefix(); the
// remaining stages run per slot through Step(i) on the same SoA storage.
inline SourceText emit_hybrid(const dsl::CoroutineDef& def, const Fsm& fsm,
                              const ContextSpec& ctx, int width, const Options& opt = {})
{
    if (width < 1)
        throw CodegenError("hybrid width must be at least 1, got " + std::to_string(width));
    // An empty prefix is legal: Prefix() only resets the states.
    auto prefix = lower::static_prefix_length(fsm);
    detail::EmitEnv env{ctx, opt, {true}};
    detail::Out out;
    std::string name = hybrid_name(def.name(), width);
    out.line(0, "// Hybrid SoA state for " + def.name() + " x " + std::to_string(width) + ": " +
                    std::to_string(prefix) + " fused stage(s), then dynamic");
    out.line(0, "template <int _Width = " + std::to_string(width) + ">");
    out.line(0, "struct " + name + " {");
    out.line(1, "static constexpr int Width = _Width;");
    out.line(1, "static constexpr int _PrefixStages = " + std::to_string(prefix) + ";");
    out.line(1, "static constexpr int _Finished = " + std::to_string(fsm.finished_id) + ";");
    detail::emit_shared_struct(out, 1, ctx);
    if (!ctx.shared_args.empty())
        out.line(1, "Shared _shared{};");
    detail::emit_soa_fields(out, 1, ctx, 0, true);
    detail::emit_soa_init(out, 1, ctx, true);
    out.line(1, "void Prefix() {");
    detail::emit_shared_aliases(out, 2, ctx, "_shared.");
    for (std::size_t s = 0; s < prefix; ++s)
        detail::emit_fused_stage(out, 2, fsm, fsm.states[s], env);
    out.line(2, "for (int _i = 0; _i < _Width; _i++) {");
    out.line(3, "_state[_i] = _PrefixStages;");
    out.line(2, "}");
    out.line(1, "}");
    out.line(1, "bool Done(int _i) const { return _state[_i] == _Finished; }");
    out.line(1, "bool Step(int _i) {");
    detail::emit_shared_aliases(out, 2, ctx, "_shared.");
    detail::emit_soa_aliases(out, 2, ctx);
    detail::emit_step_body(out, 2, fsm, env);
    out.line(1, "}");
    detail::emit_soa_fini(out, 1, ctx);
    out.line(0, "};");
    return {banner(def.name()), out.str()};
}

struct UnitOptions
{
    int width = 8;
    Options codegen;
};

// Everything legal for the definition in one fragment: routine, dynamic
// coroutine, hybrid batch, and the static batch when the FSM is straight.
inline SourceText emit_unit(const dsl::CoroutineDef& def, const UnitOptions& opt = {})
{
    auto fsm = lower::split_stages(def);
    auto ctx = lower::compute_context(def, fsm);
    std::string text;
    text += "\n" + emit_routine(def, opt.codegen).text;
    text += "\n" + emit_dynamic(def, fsm, ctx, opt.codegen).text;
    if (lower::is_straight_line(fsm))
        text += "\n" + emit_static(def, fsm, ctx, opt.width, opt.codegen).text;
    text += "\n" + emit_hybrid(def, fsm, ctx, opt.width, opt.codegen).text;
    return {banner(def.name()), text};
}

} // namespace coil::codegen

#endif // COIL_CODEGEN_HPP
