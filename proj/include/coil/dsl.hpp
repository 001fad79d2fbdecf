// dsl.hpp
// Statement tree and builder for interleavable coroutine definitions.
//
// A definition is a tree of control statements whose leaves are opaque
// fragments of C++ text. The toolkit never looks inside that text; it only
// splits the tree at Yield points and re-emits the fragments verbatim.

#ifndef COIL_DSL_HPP
#define COIL_DSL_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <optional>
#include <regex>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace coil::dsl {

// Thrown when a node cannot be constructed (empty text, bad identifier,
// duplicate declaration, ...).
class BuildError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline constexpr std::array<std::string_view, 32> kKeywords = {
    "alignas", "auto",     "bool",   "break",    "case",     "char",
    "class",   "const",    "continue", "default", "delete",  "do",
    "double",  "else",     "enum",   "false",    "float",    "for",
    "goto",    "if",       "int",    "long",     "namespace", "new",
    "return",  "sizeof",   "static", "struct",   "switch",   "this",
    "true",    "while"};

} // namespace detail

inline bool is_identifier(std::string_view s)
{
    if (s.empty())
        return false;
    auto head = static_cast<unsigned char>(s.front());
    if (!(std::isalpha(head) || head == '_'))
        return false;
    for (char c : s) {
        auto u = static_cast<unsigned char>(c);
        if (!(std::isalnum(u) || u == '_'))
            return false;
    }
    return std::find(detail::kKeywords.begin(), detail::kKeywords.end(), s) ==
           detail::kKeywords.end();
}

// Opaque expression or statement text in the target language.
struct Expr
{
    std::string text;

    Expr(std::string t) : text(std::move(t))
    {
        if (text.empty())
            throw BuildError("opaque text must not be empty");
    }
    Expr(const char* t) : Expr(std::string(t)) {}

    bool operator==(const Expr&) const = default;
};

// Opaque type name in the target language.
struct TypeText
{
    std::string text;

    TypeText(std::string t) : text(std::move(t))
    {
        if (text.empty())
            throw BuildError("type text must not be empty");
    }
    TypeText(const char* t) : TypeText(std::string(t)) {}

    bool operator==(const TypeText&) const = default;
};

enum class DeclKind { Arg, SharedArg, Result, Variable };

// Scheduling hint carried by Yield and by the definition as a whole.
enum class Hint { Default, StaticStage, DynamicStage };

inline std::string to_string(DeclKind k)
{
    switch (k) {
    case DeclKind::Arg: return "Arg";
    case DeclKind::SharedArg: return "SharedArg";
    case DeclKind::Result: return "Result";
    case DeclKind::Variable: return "Variable";
    }
    return "?";
}

inline std::string to_string(Hint h)
{
    switch (h) {
    case Hint::Default: return "default";
    case Hint::StaticStage: return "static";
    case Hint::DynamicStage: return "dynamic";
    }
    return "?";
}

struct Decl
{
    DeclKind kind;
    TypeText type;
    std::string name; // empty for Result
    std::optional<Expr> init;

    bool operator==(const Decl&) const = default;
};

inline void check_decl_name(std::string_view name)
{
    if (!is_identifier(name))
        throw BuildError("invalid identifier '" + std::string(name) + "'");
    if (name.front() == '_')
        throw BuildError("identifier '" + std::string(name) +
                         "' uses the prefix reserved for generated code");
}

inline Decl Arg(TypeText type, std::string name)
{
    check_decl_name(name);
    return {DeclKind::Arg, std::move(type), std::move(name), std::nullopt};
}

inline Decl SharedArg(TypeText type, std::string name)
{
    check_decl_name(name);
    return {DeclKind::SharedArg, std::move(type), std::move(name), std::nullopt};
}

inline Decl Result(TypeText type)
{
    return {DeclKind::Result, std::move(type), {}, std::nullopt};
}

inline Decl Variable(TypeText type, std::string name, std::optional<Expr> init = std::nullopt)
{
    check_decl_name(name);
    return {DeclKind::Variable, std::move(type), std::move(name), std::move(init)};
}

struct Stmt;

struct Block
{
    std::vector<Decl> decls;
    std::vector<Stmt> stmts;

    bool operator==(const Block&) const = default;
};

struct Opaque
{
    Expr text;
    bool operator==(const Opaque&) const = default;
};

struct If
{
    Expr cond;
    Block then_block;
    std::optional<Block> else_block;
    bool yield_before_branch = false;
    bool operator==(const If&) const = default;
};

struct Case
{
    Expr label;
    Block body;
    bool operator==(const Case&) const = default;
};

// Cases fall through to the next case (and finally into default) unless
// they Break, as in C.
struct Switch
{
    Expr scrutinee;
    std::vector<Case> cases;
    std::optional<Block> default_block;
    bool operator==(const Switch&) const = default;
};

struct While
{
    Expr cond;
    Block body;
    bool operator==(const While&) const = default;
};

struct DoWhile
{
    Block body;
    Expr cond;
    bool operator==(const DoWhile&) const = default;
};

struct Break
{
    bool operator==(const Break&) const = default;
};

struct Continue
{
    bool operator==(const Continue&) const = default;
};

struct Return
{
    std::optional<Expr> value;
    bool operator==(const Return&) const = default;
};

struct Yield
{
    Hint hint = Hint::Default;
    bool operator==(const Yield&) const = default;
};

struct Prefetch
{
    std::vector<Expr> addrs;
    bool operator==(const Prefetch&) const = default;
};

// dst = *(addr). With yield_before_use the address is computed, prefetched
// and the coroutine suspends before the dereference.
struct Load
{
    std::string dst;
    Expr addr;
    bool yield_before_use = false;
    bool operator==(const Load&) const = default;
};

// *(addr) = value
struct Store
{
    Expr addr;
    Expr value;
    bool yield_before_use = false;
    bool operator==(const Store&) const = default;
};

struct Assign
{
    std::string dst;
    Expr value;
    bool operator==(const Assign&) const = default;
};

// Tail call: rebinds the Args and resumes at the initial state.
struct Call
{
    std::string callee;
    std::vector<Expr> args;
    bool operator==(const Call&) const = default;
};

namespace detail {

template <typename T, typename V>
struct is_alternative;

template <typename T, typename... Ts>
struct is_alternative<T, std::variant<Ts...>> : std::bool_constant<(std::is_same_v<T, Ts> || ...)>
{};

} // namespace detail

struct Stmt
{
    using Node = std::variant<Opaque, Block, If, Switch, While, DoWhile, Break, Continue,
                              Return, Yield, Prefetch, Load, Store, Assign, Call>;
    Node node;

    template <typename T>
    static constexpr bool is_node = detail::is_alternative<T, Node>::value;

    template <typename T>
        requires is_node<std::remove_cvref_t<T>>
    Stmt(T&& n) : node(std::forward<T>(n))
    {}

    template <typename T>
    bool is() const
    {
        return std::holds_alternative<T>(node);
    }

    bool operator==(const Stmt&) const = default;
};

inline void append_stmt(Block& block, Stmt s)
{
    block.stmts.push_back(std::move(s));
}

inline void append_decl(Block& block, Decl d)
{
    if (d.kind != DeclKind::Variable)
        throw BuildError("only Variable declarations may be attached to inner blocks");
    block.decls.push_back(std::move(d));
}

namespace detail {

inline void add_item(Block& b, Stmt s) { append_stmt(b, std::move(s)); }
inline void add_item(Block& b, Decl d) { append_decl(b, std::move(d)); }
inline void add_item(Block& b, Expr e) { append_stmt(b, Opaque{std::move(e)}); }

template <typename... Items>
Block make_block(Items&&... items)
{
    Block b;
    (add_item(b, std::forward<Items>(items)), ...);
    return b;
}

} // namespace detail

// ---- statement builders ---------------------------------------------------
//
// Spelled like the node kinds; bring them in with
// `using namespace coil::dsl::build;`.

namespace build {

struct ThenBlock { Block block; };
struct ElseBlock { Block block; };
struct DoBlock { Block block; };
struct DefaultBlock { Block block; };

template <typename... Items>
Block Blk(Items&&... items)
{
    return detail::make_block(std::forward<Items>(items)...);
}

template <typename... Items>
ThenBlock Then(Items&&... items)
{
    return {detail::make_block(std::forward<Items>(items)...)};
}

template <typename... Items>
ElseBlock Else(Items&&... items)
{
    return {detail::make_block(std::forward<Items>(items)...)};
}

template <typename... Items>
DoBlock Do(Items&&... items)
{
    return {detail::make_block(std::forward<Items>(items)...)};
}

template <typename... Items>
DefaultBlock Default(Items&&... items)
{
    return {detail::make_block(std::forward<Items>(items)...)};
}

inline dsl::Stmt Stmt(Expr text) { return Opaque{std::move(text)}; }

inline dsl::Stmt If(Expr cond, ThenBlock t, std::optional<ElseBlock> e = std::nullopt,
                    bool yield_before_branch = false)
{
    std::optional<Block> else_block;
    if (e)
        else_block = std::move(e->block);
    return dsl::If{std::move(cond), std::move(t.block), std::move(else_block),
                   yield_before_branch};
}

// If whose condition is evaluated and stored before a suspension point, and
// only branched on after resumption.
inline dsl::Stmt IfAfterYield(Expr cond, ThenBlock t, std::optional<ElseBlock> e = std::nullopt)
{
    return If(std::move(cond), std::move(t), std::move(e), true);
}

template <typename... Items>
dsl::Case Case(Expr label, Items&&... items)
{
    return {std::move(label), detail::make_block(std::forward<Items>(items)...)};
}

inline dsl::Stmt Switch(Expr scrutinee, std::vector<dsl::Case> cases,
                        std::optional<DefaultBlock> d = std::nullopt)
{
    std::optional<Block> default_block;
    if (d)
        default_block = std::move(d->block);
    return dsl::Switch{std::move(scrutinee), std::move(cases), std::move(default_block)};
}

template <typename... Items>
dsl::Stmt While(Expr cond, Items&&... body)
{
    return dsl::While{std::move(cond), detail::make_block(std::forward<Items>(body)...)};
}

inline dsl::Stmt DoWhile(DoBlock body, Expr cond)
{
    return dsl::DoWhile{std::move(body.block), std::move(cond)};
}

inline dsl::Stmt Break() { return dsl::Break{}; }
inline dsl::Stmt Continue() { return dsl::Continue{}; }
inline dsl::Stmt Return() { return dsl::Return{}; }
inline dsl::Stmt Return(Expr value) { return dsl::Return{std::move(value)}; }
inline dsl::Stmt Yield(Hint hint = Hint::Default) { return dsl::Yield{hint}; }

template <typename... Addrs>
dsl::Stmt Prefetch(Expr first, Addrs&&... rest)
{
    return dsl::Prefetch{{std::move(first), Expr(std::forward<Addrs>(rest))...}};
}

inline dsl::Stmt Load(std::string dst, Expr addr, bool yield_before_use = false)
{
    if (!is_identifier(dst))
        throw BuildError("invalid Load destination '" + dst + "'");
    return dsl::Load{std::move(dst), std::move(addr), yield_before_use};
}

inline dsl::Stmt Store(Expr addr, Expr value, bool yield_before_use = false)
{
    return dsl::Store{std::move(addr), std::move(value), yield_before_use};
}

inline dsl::Stmt Assign(std::string dst, Expr value)
{
    if (!is_identifier(dst))
        throw BuildError("invalid Assign destination '" + dst + "'");
    return dsl::Assign{std::move(dst), std::move(value)};
}

template <typename... Args>
dsl::Stmt Call(std::string callee, Args&&... args)
{
    if (!is_identifier(callee))
        throw BuildError("invalid Call target '" + callee + "'");
    return dsl::Call{std::move(callee), {Expr(std::forward<Args>(args))...}};
}

using dsl::Arg;
using dsl::Result;
using dsl::SharedArg;
using dsl::Variable;

} // namespace build

// ---- coroutine definitions -----------------------------------------------

class CoroutineDef
{
public:
    explicit CoroutineDef(std::string name) : name_(std::move(name))
    {
        if (!is_identifier(name_))
            throw BuildError("invalid coroutine name '" + name_ + "'");
    }

    const std::string& name() const { return name_; }
    const std::vector<Decl>& decls() const { return decls_; }
    const Block& body() const { return body_; }
    Block& body() { return body_; }
    Hint schedule() const { return schedule_; }

    CoroutineDef& add_decl(Decl d)
    {
        if (d.kind == DeclKind::Result) {
            if (result())
                throw BuildError("coroutine '" + name_ + "' already declares a Result");
            if (d.init)
                throw BuildError("Result cannot have an initializer");
        } else {
            if (d.kind == DeclKind::SharedArg && d.init)
                throw BuildError("SharedArg cannot have an initializer");
            if (d.kind == DeclKind::Arg && d.init)
                throw BuildError("Arg cannot have an initializer");
            check_decl_name(d.name);
            if (find(d.name))
                throw BuildError("duplicate declaration of '" + d.name + "'");
        }
        decls_.push_back(std::move(d));
        return *this;
    }

    CoroutineDef& Result(TypeText type) { return add_decl(dsl::Result(std::move(type))); }
    CoroutineDef& Arg(TypeText type, std::string name)
    {
        return add_decl(dsl::Arg(std::move(type), std::move(name)));
    }
    CoroutineDef& SharedArg(TypeText type, std::string name)
    {
        return add_decl(dsl::SharedArg(std::move(type), std::move(name)));
    }
    CoroutineDef& Variable(TypeText type, std::string name,
                           std::optional<Expr> init = std::nullopt)
    {
        return add_decl(dsl::Variable(std::move(type), std::move(name), std::move(init)));
    }
    CoroutineDef& Schedule(Hint h)
    {
        schedule_ = h;
        return *this;
    }

    template <typename... Items>
    CoroutineDef& Body(Items&&... items)
    {
        (detail::add_item(body_, std::forward<Items>(items)), ...);
        return *this;
    }

    const Decl* result() const
    {
        auto it = std::find_if(decls_.begin(), decls_.end(),
                               [](const Decl& d) { return d.kind == DeclKind::Result; });
        return it == decls_.end() ? nullptr : &*it;
    }

    const Decl* find(std::string_view name) const
    {
        auto it = std::find_if(decls_.begin(), decls_.end(),
                               [&](const Decl& d) { return d.name == name; });
        return it == decls_.end() ? nullptr : &*it;
    }

    std::vector<const Decl*> decls_of(DeclKind kind) const
    {
        std::vector<const Decl*> out;
        for (const auto& d : decls_)
            if (d.kind == kind)
                out.push_back(&d);
        return out;
    }

    bool operator==(const CoroutineDef&) const = default;

private:
    std::string name_;
    std::vector<Decl> decls_;
    Block body_;
    Hint schedule_ = Hint::Default;
};

inline CoroutineDef Coroutine(std::string name) { return CoroutineDef(std::move(name)); }

namespace build {
using dsl::Coroutine;
} // namespace build

// ---- validation -----------------------------------------------------------

enum class Severity { Error, Warning };

struct Diagnostic
{
    std::string rule; // R1..R5, R-dup, W-unreachable
    std::string path;
    std::string message;
    Severity severity = Severity::Error;

    bool operator==(const Diagnostic&) const = default;
};

inline std::string format(const Diagnostic& d)
{
    return d.rule + ": " + d.path + ": " + d.message;
}

inline bool has_errors(const std::vector<Diagnostic>& ds)
{
    return std::any_of(ds.begin(), ds.end(),
                       [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

namespace detail {

class Validator
{
public:
    explicit Validator(const CoroutineDef& def) : def_(def) {}

    std::vector<Diagnostic> run()
    {
        std::set<std::string> seen;
        for (const auto& d : def_.decls()) {
            if (d.kind == DeclKind::Result)
                continue;
            seen.insert(d.name);
            if (d.kind == DeclKind::Arg || d.kind == DeclKind::Variable)
                writable_.push_back({d.name});
        }
        all_names_ = std::move(seen);
        block(def_.body(), "body");
        return std::move(out_);
    }

private:
    void emit(std::string rule, const std::string& path, std::string msg)
    {
        out_.push_back({std::move(rule), path, std::move(msg), Severity::Error});
    }

    bool is_writable(const std::string& name) const
    {
        for (const auto& scope : writable_)
            for (const auto& n : scope)
                if (n == name)
                    return true;
        return false;
    }

    void block(const Block& b, const std::string& path)
    {
        std::vector<std::string> scope;
        for (std::size_t i = 0; i < b.decls.size(); ++i) {
            const auto& d = b.decls[i];
            if (!all_names_.insert(d.name).second)
                emit("R-dup", path + ".decl[" + std::to_string(i) + "]",
                     "'" + d.name + "' is already declared in this coroutine");
            scope.push_back(d.name);
        }
        writable_.push_back(std::move(scope));
        for (std::size_t i = 0; i < b.stmts.size(); ++i) {
            std::string p = path + "[" + std::to_string(i) + "]";
            if (const auto* call = std::get_if<dsl::Call>(&b.stmts[i].node)) {
                if (i + 1 != b.stmts.size())
                    emit("R3", p, "Call to '" + call->callee +
                                      "' must be the last statement on its path");
            }
            stmt(b.stmts[i], p);
        }
        writable_.pop_back();
    }

    void stmt(const Stmt& s, const std::string& p)
    {
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, Opaque>) {
                    static const std::regex marker(R"(\bYield\s*\()");
                    if (std::regex_search(n.text.text, marker))
                        emit("R4", p, "opaque text contains the reserved yield marker");
                } else if constexpr (std::is_same_v<T, Block>) {
                    block(n, p + ".block");
                } else if constexpr (std::is_same_v<T, dsl::If>) {
                    block(n.then_block, p + ".then");
                    if (n.else_block)
                        block(*n.else_block, p + ".else");
                } else if constexpr (std::is_same_v<T, dsl::Switch>) {
                    ++switch_depth_;
                    for (std::size_t c = 0; c < n.cases.size(); ++c)
                        block(n.cases[c].body, p + ".case" + std::to_string(c));
                    if (n.default_block)
                        block(*n.default_block, p + ".default");
                    --switch_depth_;
                } else if constexpr (std::is_same_v<T, dsl::While>) {
                    ++loop_depth_;
                    block(n.body, p + ".do");
                    --loop_depth_;
                } else if constexpr (std::is_same_v<T, dsl::DoWhile>) {
                    ++loop_depth_;
                    block(n.body, p + ".do");
                    --loop_depth_;
                } else if constexpr (std::is_same_v<T, dsl::Break>) {
                    if (loop_depth_ == 0 && switch_depth_ == 0)
                        emit("R1", p, "Break outside While/DoWhile/Switch");
                } else if constexpr (std::is_same_v<T, dsl::Continue>) {
                    if (loop_depth_ == 0)
                        emit("R1", p, "Continue outside While/DoWhile");
                } else if constexpr (std::is_same_v<T, dsl::Return>) {
                    if (n.value && !def_.result())
                        emit("R2", p, "Return with a value requires a Result declaration");
                } else if constexpr (std::is_same_v<T, dsl::Load>) {
                    if (!is_writable(n.dst))
                        emit("R5", p, "Load destination '" + n.dst +
                                          "' is not a declared Variable or Arg");
                } else if constexpr (std::is_same_v<T, dsl::Assign>) {
                    if (!is_writable(n.dst))
                        emit("R5", p, "Assign destination '" + n.dst +
                                          "' is not a declared Variable or Arg");
                } else if constexpr (std::is_same_v<T, dsl::Call>) {
                    if (n.callee != def_.name())
                        emit("R3", p, "Call may only resume this coroutine ('" +
                                          def_.name() + "'), not '" + n.callee + "'");
                    else if (n.args.size() != def_.decls_of(DeclKind::Arg).size())
                        emit("R3", p, "Call passes " + std::to_string(n.args.size()) +
                                          " arguments, coroutine takes " +
                                          std::to_string(def_.decls_of(DeclKind::Arg).size()));
                }
            },
            s.node);
    }

    const CoroutineDef& def_;
    std::vector<Diagnostic> out_;
    std::set<std::string> all_names_;
    std::vector<std::vector<std::string>> writable_;
    int loop_depth_ = 0;
    int switch_depth_ = 0;
};

} // namespace detail

// Empty result iff the definition can be lowered.
inline std::vector<Diagnostic> validate(const CoroutineDef& def)
{
    return detail::Validator(def).run();
}

// Visits every statement in program order (pre-order).
template <typename F>
void for_each_stmt(const Block& b, F&& f)
{
    for (const auto& s : b.stmts) {
        f(s);
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, Block>) {
                    for_each_stmt(n, f);
                } else if constexpr (std::is_same_v<T, dsl::If>) {
                    for_each_stmt(n.then_block, f);
                    if (n.else_block)
                        for_each_stmt(*n.else_block, f);
                } else if constexpr (std::is_same_v<T, dsl::Switch>) {
                    for (const auto& c : n.cases)
                        for_each_stmt(c.body, f);
                    if (n.default_block)
                        for_each_stmt(*n.default_block, f);
                } else if constexpr (std::is_same_v<T, dsl::While> ||
                                     std::is_same_v<T, dsl::DoWhile>) {
                    for_each_stmt(n.body, f);
                }
            },
            s.node);
    }
}

} // namespace coil::dsl

#endif // COIL_DSL_HPP
