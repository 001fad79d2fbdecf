// dsl_text.hpp
// Debug printer for coroutine definitions in builder-call form, and the
// matching reader. One node per line, children indented by two spaces,
// arguments written as JSON literals so opaque text survives verbatim.
//
//   Coroutine("BST_find")
//     Result("node*")
//     Arg("node*", "n")
//     Body()
//       While("n")
//         Prefetch("n")
//         Yield("default")

#ifndef COIL_DSL_TEXT_HPP
#define COIL_DSL_TEXT_HPP

#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "coil/dsl.hpp"

namespace coil::dsl {

class ParseError : public std::runtime_error
{
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line)
    {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

namespace detail {

class Printer
{
public:
    std::string print(const CoroutineDef& def)
    {
        line(0, "Coroutine", {q(def.name())});
        if (def.schedule() != Hint::Default)
            line(1, "Schedule", {q(std::string(to_string(def.schedule())))});
        for (const auto& d : def.decls())
            decl(1, d);
        line(1, "Body", {});
        block_items(2, def.body());
        return out_.str();
    }

private:
    static std::string q(const std::string& s) { return nlohmann::json(s).dump(); }
    static std::string q(const Expr& e) { return q(e.text); }
    static std::string b(bool v) { return v ? "true" : "false"; }

    void line(int depth, std::string_view name, const std::vector<std::string>& args)
    {
        out_ << std::string(static_cast<std::size_t>(depth) * 2, ' ') << name << '(';
        for (std::size_t i = 0; i < args.size(); ++i)
            out_ << (i ? ", " : "") << args[i];
        out_ << ")\n";
    }

    void decl(int depth, const Decl& d)
    {
        switch (d.kind) {
        case DeclKind::Result: line(depth, "Result", {q(d.type.text)}); break;
        case DeclKind::Arg: line(depth, "Arg", {q(d.type.text), q(d.name)}); break;
        case DeclKind::SharedArg: line(depth, "SharedArg", {q(d.type.text), q(d.name)}); break;
        case DeclKind::Variable:
            line(depth, "Variable",
                 {q(d.type.text), q(d.name), d.init ? q(*d.init) : std::string("null")});
            break;
        }
    }

    void block_items(int depth, const Block& blk)
    {
        for (const auto& d : blk.decls)
            decl(depth, d);
        for (const auto& s : blk.stmts)
            stmt(depth, s);
    }

    void stmt(int depth, const Stmt& s)
    {
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, Opaque>) {
                    line(depth, "Stmt", {q(n.text)});
                } else if constexpr (std::is_same_v<T, Block>) {
                    line(depth, "Block", {});
                    block_items(depth + 1, n);
                } else if constexpr (std::is_same_v<T, dsl::If>) {
                    line(depth, "If", {q(n.cond), b(n.yield_before_branch)});
                    line(depth + 1, "Then", {});
                    block_items(depth + 2, n.then_block);
                    if (n.else_block) {
                        line(depth + 1, "Else", {});
                        block_items(depth + 2, *n.else_block);
                    }
                } else if constexpr (std::is_same_v<T, dsl::Switch>) {
                    line(depth, "Switch", {q(n.scrutinee)});
                    for (const auto& c : n.cases) {
                        line(depth + 1, "Case", {q(c.label)});
                        block_items(depth + 2, c.body);
                    }
                    if (n.default_block) {
                        line(depth + 1, "Default", {});
                        block_items(depth + 2, *n.default_block);
                    }
                } else if constexpr (std::is_same_v<T, dsl::While>) {
                    line(depth, "While", {q(n.cond)});
                    block_items(depth + 1, n.body);
                } else if constexpr (std::is_same_v<T, dsl::DoWhile>) {
                    line(depth, "DoWhile", {q(n.cond)});
                    block_items(depth + 1, n.body);
                } else if constexpr (std::is_same_v<T, dsl::Break>) {
                    line(depth, "Break", {});
                } else if constexpr (std::is_same_v<T, dsl::Continue>) {
                    line(depth, "Continue", {});
                } else if constexpr (std::is_same_v<T, dsl::Return>) {
                    if (n.value)
                        line(depth, "Return", {q(*n.value)});
                    else
                        line(depth, "Return", {});
                } else if constexpr (std::is_same_v<T, dsl::Yield>) {
                    line(depth, "Yield", {q(std::string(to_string(n.hint)))});
                } else if constexpr (std::is_same_v<T, dsl::Prefetch>) {
                    std::vector<std::string> args;
                    for (const auto& a : n.addrs)
                        args.push_back(q(a));
                    line(depth, "Prefetch", args);
                } else if constexpr (std::is_same_v<T, dsl::Load>) {
                    line(depth, "Load", {q(n.dst), q(n.addr), b(n.yield_before_use)});
                } else if constexpr (std::is_same_v<T, dsl::Store>) {
                    line(depth, "Store", {q(n.addr), q(n.value), b(n.yield_before_use)});
                } else if constexpr (std::is_same_v<T, dsl::Assign>) {
                    line(depth, "Assign", {q(n.dst), q(n.value)});
                } else if constexpr (std::is_same_v<T, dsl::Call>) {
                    std::vector<std::string> args{q(n.callee)};
                    for (const auto& a : n.args)
                        args.push_back(q(a));
                    line(depth, "Call", args);
                }
            },
            s.node);
    }

    std::ostringstream out_;
};

struct TextLine
{
    std::size_t number;
    int depth;
    std::string name;
    nlohmann::json args;
};

class Reader
{
public:
    explicit Reader(std::string_view text)
    {
        std::size_t number = 0;
        std::size_t pos = 0;
        while (pos < text.size()) {
            auto end = text.find('\n', pos);
            if (end == std::string_view::npos)
                end = text.size();
            auto raw = text.substr(pos, end - pos);
            pos = end + 1;
            ++number;
            if (raw.find_first_not_of(" \t\r") == std::string_view::npos)
                continue;
            if (raw.substr(raw.find_first_not_of(' ')).starts_with("#"))
                continue;
            lines_.push_back(parse_line(number, raw));
        }
    }

    CoroutineDef read()
    {
        if (lines_.empty())
            throw ParseError(0, "empty definition");
        const auto& head = lines_[0];
        expect(head, "Coroutine", 0);
        CoroutineDef def = wrap(head, [&] { return CoroutineDef(str(head, 0)); });
        pos_ = 1;
        bool body_seen = false;
        while (pos_ < lines_.size()) {
            const auto& l = lines_[pos_];
            if (l.depth != 1)
                throw ParseError(l.number, "expected a top-level item at indent 2");
            ++pos_;
            if (l.name == "Schedule") {
                def.Schedule(hint(l, str(l, 0)));
            } else if (l.name == "Body") {
                if (body_seen)
                    throw ParseError(l.number, "duplicate Body()");
                body_seen = true;
                block_items(2, def.body());
            } else {
                wrap(l, [&] { def.add_decl(decl(l)); return 0; });
            }
        }
        return def;
    }

private:
    static TextLine parse_line(std::size_t number, std::string_view raw)
    {
        auto indent = raw.find_first_not_of(' ');
        if (indent % 2 != 0)
            throw ParseError(number, "indentation must be a multiple of two spaces");
        auto open = raw.find('(', indent);
        auto close = raw.find_last_of(')');
        if (open == std::string_view::npos || close == std::string_view::npos || close < open)
            throw ParseError(number, "expected Name(args)");
        TextLine l{number, static_cast<int>(indent / 2),
                   std::string(raw.substr(indent, open - indent)), {}};
        try {
            l.args = nlohmann::json::parse("[" + std::string(raw.substr(open + 1, close - open - 1)) +
                                           "]");
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(number, std::string("bad argument list: ") + e.what());
        }
        return l;
    }

    template <typename F>
    static std::invoke_result_t<F> wrap(const TextLine& l, F&& f)
    {
        try {
            return f();
        } catch (const BuildError& e) {
            throw ParseError(l.number, e.what());
        }
    }

    static void expect(const TextLine& l, std::string_view name, std::size_t min_args)
    {
        if (l.name != name)
            throw ParseError(l.number, "expected " + std::string(name) + ", got " + l.name);
        if (l.args.size() < min_args)
            throw ParseError(l.number, l.name + " needs " + std::to_string(min_args) + " arguments");
    }

    static std::string str(const TextLine& l, std::size_t i)
    {
        if (i >= l.args.size() || !l.args[i].is_string())
            throw ParseError(l.number, l.name + ": argument " + std::to_string(i) +
                                           " must be a string");
        return l.args[i].get<std::string>();
    }

    static std::optional<Expr> opt_str(const TextLine& l, std::size_t i)
    {
        if (i >= l.args.size() || l.args[i].is_null())
            return std::nullopt;
        return Expr(str(l, i));
    }

    static bool flag(const TextLine& l, std::size_t i)
    {
        if (i >= l.args.size())
            return false;
        if (!l.args[i].is_boolean())
            throw ParseError(l.number, l.name + ": argument " + std::to_string(i) +
                                           " must be true or false");
        return l.args[i].get<bool>();
    }

    static Hint hint(const TextLine& l, const std::string& s)
    {
        if (s == "default")
            return Hint::Default;
        if (s == "static")
            return Hint::StaticStage;
        if (s == "dynamic")
            return Hint::DynamicStage;
        throw ParseError(l.number, "unknown hint '" + s + "'");
    }

    static Decl decl(const TextLine& l)
    {
        if (l.name == "Result")
            return Result(str(l, 0));
        if (l.name == "Arg")
            return Arg(str(l, 0), str(l, 1));
        if (l.name == "SharedArg")
            return SharedArg(str(l, 0), str(l, 1));
        if (l.name == "Variable")
            return Variable(str(l, 0), str(l, 1), opt_str(l, 2));
        throw ParseError(l.number, "unknown declaration '" + l.name + "'");
    }

    bool at_depth(int depth) const { return pos_ < lines_.size() && lines_[pos_].depth == depth; }

    void block_items(int depth, Block& blk)
    {
        if (pos_ < lines_.size() && lines_[pos_].depth > depth)
            throw ParseError(lines_[pos_].number, "unexpected indentation");
        while (at_depth(depth)) {
            const auto& l = lines_[pos_];
            if (l.name == "Variable") {
                ++pos_;
                wrap(l, [&] { append_decl(blk, decl(l)); return 0; });
            } else {
                append_stmt(blk, stmt(depth));
            }
            if (pos_ < lines_.size() && lines_[pos_].depth > depth)
                throw ParseError(lines_[pos_].number, "unexpected indentation");
        }
    }

    Block sub_block(int depth)
    {
        Block b;
        block_items(depth, b);
        return b;
    }

    Stmt stmt(int depth)
    {
        const TextLine& l = lines_[pos_++];
        return wrap(l, [&]() -> Stmt {
            const auto& n = l.name;
            if (n == "Stmt")
                return Opaque{str(l, 0)};
            if (n == "Block")
                return sub_block(depth + 1);
            if (n == "If") {
                dsl::If node{str(l, 0), {}, std::nullopt, flag(l, 1)};
                if (!at_depth(depth + 1) || lines_[pos_].name != "Then")
                    throw ParseError(l.number, "If requires a Then() child");
                ++pos_;
                node.then_block = sub_block(depth + 2);
                if (at_depth(depth + 1) && lines_[pos_].name == "Else") {
                    ++pos_;
                    node.else_block = sub_block(depth + 2);
                }
                return node;
            }
            if (n == "Switch") {
                dsl::Switch node{str(l, 0), {}, std::nullopt};
                while (at_depth(depth + 1) && lines_[pos_].name == "Case") {
                    const auto& c = lines_[pos_++];
                    node.cases.push_back({str(c, 0), sub_block(depth + 2)});
                }
                if (at_depth(depth + 1) && lines_[pos_].name == "Default") {
                    ++pos_;
                    node.default_block = sub_block(depth + 2);
                }
                return node;
            }
            if (n == "While")
                return dsl::While{str(l, 0), sub_block(depth + 1)};
            if (n == "DoWhile") {
                Expr cond = str(l, 0);
                return dsl::DoWhile{sub_block(depth + 1), std::move(cond)};
            }
            if (n == "Break")
                return dsl::Break{};
            if (n == "Continue")
                return dsl::Continue{};
            if (n == "Return")
                return dsl::Return{opt_str(l, 0)};
            if (n == "Yield")
                return dsl::Yield{l.args.empty() ? Hint::Default : hint(l, str(l, 0))};
            if (n == "Prefetch") {
                dsl::Prefetch p;
                for (std::size_t i = 0; i < l.args.size(); ++i)
                    p.addrs.emplace_back(str(l, i));
                if (p.addrs.empty())
                    throw ParseError(l.number, "Prefetch needs at least one address");
                return p;
            }
            if (n == "Load")
                return build::Load(str(l, 0), str(l, 1), flag(l, 2));
            if (n == "Store")
                return build::Store(str(l, 0), str(l, 1), flag(l, 2));
            if (n == "Assign")
                return build::Assign(str(l, 0), str(l, 1));
            if (n == "Call") {
                dsl::Call c{str(l, 0), {}};
                if (!is_identifier(c.callee))
                    throw ParseError(l.number, "invalid Call target");
                for (std::size_t i = 1; i < l.args.size(); ++i)
                    c.args.emplace_back(str(l, i));
                return c;
            }
            throw ParseError(l.number, "unknown statement '" + n + "'");
        });
    }

    std::vector<TextLine> lines_;
    std::size_t pos_ = 0;
};

} // namespace detail

// Deterministic, newline-terminated builder-call form.
inline std::string to_builder_text(const CoroutineDef& def)
{
    return detail::Printer().print(def);
}

// Inverse of to_builder_text. Lines starting with '#' are comments.
inline CoroutineDef parse_builder_text(std::string_view text)
{
    return detail::Reader(text).read();
}

} // namespace coil::dsl

#endif // COIL_DSL_TEXT_HPP
