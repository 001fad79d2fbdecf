// coil-gen: writes generated coroutine units. Needs no generated code
// itself, so the build runs it before compiling anything that does.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gen_driver.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Generate C++ coroutine units from coroutine definitions"};
    std::vector<std::string> specs;
    std::string out;
    std::string out_dir = ".";
    int width = 8;
    bool all = false;
    app.add_option("defs", specs, "registered coroutine names or definition files");
    app.add_option("-o,--output", out, "output file (single definition only)");
    app.add_option("--out-dir", out_dir, "directory for <name>.gen.hpp outputs");
    app.add_option("-w,--width", width, "default width of the batched units")
        ->check(CLI::PositiveNumber);
    app.add_flag("--all", all, "every registered kernel definition");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    if (!out.empty() && (specs.size() != 1 || all)) {
        std::cerr << "coil-gen: -o needs exactly one definition\n";
        return 2;
    }
    int rc = 0;
    if (all)
        rc = std::max(rc, coil::tools::run_gen_all(out_dir, width, std::cerr));
    for (const auto& s : specs) {
        if (!out.empty()) {
            rc = std::max(rc, coil::tools::run_gen(s, out, width, std::cerr));
            continue;
        }
        auto def = coil::tools::load_def(s, std::cerr);
        if (!def) {
            rc = std::max(rc, 2);
            continue;
        }
        rc = std::max(rc, coil::tools::write_unit(
                              *def, coil::tools::fs::path(out_dir) /
                                        coil::tools::default_output(*def),
                              width, std::cerr));
    }
    if (!all && specs.empty()) {
        std::cerr << app.help();
        return 2;
    }
    return rc;
}
