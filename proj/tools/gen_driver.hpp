// gen_driver.hpp
// `gen` as used by coil-gen (at build time) and by the coil CLI.
// Exit codes: 0 written, 1 I/O failure, 2 unknown or invalid definition.

#ifndef COIL_TOOLS_GEN_DRIVER_HPP
#define COIL_TOOLS_GEN_DRIVER_HPP

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "coil/codegen.hpp"
#include "coil/dsl_text.hpp"
#include "coil/kernels/defs.hpp"

namespace coil::tools {

namespace fs = std::filesystem;

// A registry key or coroutine name, else a path to a printed definition.
inline std::optional<dsl::CoroutineDef> load_def(const std::string& spec, std::ostream& err)
{
    if (const auto* k = kernels::find_kernel_def(spec))
        return k->make();
    std::ifstream in(spec);
    if (!in) {
        err << "gen: '" << spec << "' is neither a registered coroutine nor a readable file\n";
        return std::nullopt;
    }
    std::stringstream text;
    text << in.rdbuf();
    try {
        return dsl::parse_builder_text(text.str());
    } catch (const dsl::ParseError& e) {
        err << spec << ":" << e.line() << ": " << e.what() << "\n";
        return std::nullopt;
    }
}

inline std::string default_output(const dsl::CoroutineDef& def) { return def.name() + ".gen.hpp"; }

inline int write_unit(const dsl::CoroutineDef& def, const fs::path& out, int width,
                      std::ostream& err)
{
    auto diags = dsl::validate(def);
    if (dsl::has_errors(diags)) {
        for (const auto& d : diags)
            err << dsl::format(d) << "\n";
        return 2;
    }
    std::string text;
    try {
        text = codegen::emit_unit(def, {width, {}}).str();
    } catch (const std::invalid_argument& e) {
        err << "gen: " << e.what() << "\n";
        return 2;
    }
    // Unchanged files keep their timestamp so dependents do not rebuild.
    std::ifstream old(out, std::ios::binary);
    if (old) {
        std::stringstream prev;
        prev << old.rdbuf();
        if (prev.str() == text)
            return 0;
    }
    if (out.has_parent_path())
        fs::create_directories(out.parent_path());
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) {
        err << "gen: cannot write " << out.string() << "\n";
        return 1;
    }
    return 0;
}

inline int run_gen(const std::string& spec, const std::string& out, int width, std::ostream& err)
{
    auto def = load_def(spec, err);
    if (!def)
        return 2;
    return write_unit(*def, out.empty() ? fs::path(default_output(*def)) : fs::path(out), width,
                      err);
}

inline int run_gen_all(const fs::path& dir, int width, std::ostream& err)
{
    int rc = 0;
    for (const auto& k : kernels::kernel_defs()) {
        auto def = k.make();
        rc = std::max(rc, write_unit(def, dir / default_output(def), width, err));
    }
    return rc;
}

} // namespace coil::tools

#endif // COIL_TOOLS_GEN_DRIVER_HPP
