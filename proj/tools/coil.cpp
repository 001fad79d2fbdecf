// coil: benchmark harness and code generator front end.
//
//   coil bench --kernel ht --variant coro --sched dynamic --width 48
//              --size 1G --queries 10000000 --threads 1 --seed 7 --format csv
//   coil sweep --param width --values 1,8,48 [bench options]
//   coil gen <def|file> [-o out] [--width 8]
//   coil dump <def|file>
//   coil selftest
//
// Exit codes: 0 ok, 1 runtime failure, 2 configuration error.

#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bench.hpp"
#include "coil/codegen.hpp"
#include "coil/dsl_text.hpp"
#include "coil/lowering.hpp"
#include "gen_driver.hpp"

namespace {

using coil::bench::BenchConfig;
using coil::runtime::Policy;

void add_bench_options(CLI::App* cmd, BenchConfig& c)
{
    static const std::map<std::string, coil::bench::Variant> variants = {
        {"baseline", coil::bench::Variant::Baseline}, {"coro", coil::bench::Variant::Coro}};
    static const std::map<std::string, Policy> policies = {{"static", Policy::StaticBatch},
                                                           {"dynamic", Policy::DynamicRefill},
                                                           {"pushpull", Policy::PushPull},
                                                           {"hybrid", Policy::Hybrid}};
    static const std::map<std::string, coil::runtime::Drain> drains = {
        {"inorder", coil::runtime::Drain::InOrder},
        {"outoforder", coil::runtime::Drain::OutOfOrder}};
    static const std::map<std::string, coil::bench::Format> formats = {
        {"csv", coil::bench::Format::Csv}, {"json", coil::bench::Format::Json}};
    static const std::map<std::string, coil::runtime::SelectKind> selects = {
        {"arith", coil::runtime::SelectKind::Arith},
        {"ternary", coil::runtime::SelectKind::Ternary}};
    static const std::map<std::string, coil::kernels::HashKind> hashes = {
        {"fmix", coil::kernels::HashKind::Fmix}, {"identity", coil::kernels::HashKind::Identity}};

    cmd->add_option("-k,--kernel", c.kernel, "bs, bt, sl, sli, ht or cht")
        ->check(CLI::IsMember({"bs", "bt", "sl", "sli", "ht", "cht"}));
    cmd->add_option("--variant", c.variant, "baseline or coro")
        ->transform(CLI::CheckedTransformer(variants));
    cmd->add_option("--sched", c.sched.policy, "static, dynamic, pushpull or hybrid")
        ->transform(CLI::CheckedTransformer(policies));
    cmd->add_option("--drain", c.sched.drain, "inorder or outoforder")
        ->transform(CLI::CheckedTransformer(drains));
    cmd->add_option("-w,--width", c.sched.width, "coroutines in flight per thread");
    cmd->add_option("--size", c.dataset_bytes, "index size, e.g. 512M or 16G")
        ->transform(CLI::AsSizeValue(false));
    cmd->add_option("-q,--queries", c.queries, "lookups in total");
    cmd->add_option("-t,--threads", c.threads, "worker threads");
    cmd->add_option("--seed", c.seed, "dataset and query seed");
    cmd->add_option("--iter-limit", c.iter_limit, "hops per sli query");
    cmd->add_option("--hit-rate", c.hit_rate, "fraction of queries that hit");
    cmd->add_option("--format", c.format, "csv or json")->transform(CLI::CheckedTransformer(formats));
    cmd->add_option("--select", c.select, "arith or ternary (bs)")
        ->transform(CLI::CheckedTransformer(selects));
    cmd->add_option("--hash", c.hash, "fmix or identity (ht, cht)")
        ->transform(CLI::CheckedTransformer(hashes));
    cmd->add_flag("!--no-pin", c.pin, "leave threads unpinned");
    cmd->add_flag("-v,--verbose", c.verbose, "print phase markers to stderr");
}

int run_sweep(BenchConfig c, const std::string& param, const std::vector<int>& values)
{
    int max_threads = c.threads;
    if (param == "threads")
        for (int v : values)
            max_threads = std::max(max_threads, v);
    auto w = coil::bench::make_workload(c, max_threads);
    std::vector<coil::bench::BenchRow> rows;
    for (int v : values) {
        (param == "width" ? c.sched.width : c.threads) = v;
        auto part = coil::bench::execute(*w, c, nullptr, &std::cerr);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    coil::bench::write_rows(std::cout, rows, c.format);
    return 0;
}

int run_dump(const std::string& spec)
{
    auto def = coil::tools::load_def(spec, std::cerr);
    if (!def)
        return 2;
    std::cout << coil::dsl::to_builder_text(*def);
    auto diags = coil::dsl::validate(*def);
    for (const auto& d : diags)
        std::cout << "# " << coil::dsl::format(d) << "\n";
    if (coil::dsl::has_errors(diags))
        return 2;
    auto fsm = coil::lower::split_stages(*def);
    std::cout << coil::lower::dump(fsm);
    for (const auto& d : fsm.diagnostics)
        std::cout << "# " << coil::dsl::format(d) << "\n";
    auto ctx = coil::lower::compute_context(*def, fsm);
    std::cout << coil::codegen::emit_context(ctx, {coil::codegen::LayoutKind::AoS, 1}).text;
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Coroutine interleaving toolkit: benchmarks and code generation"};
    app.require_subcommand(1);

    BenchConfig bench_cfg;
    auto* bench = app.add_subcommand("bench", "run one benchmark configuration");
    add_bench_options(bench, bench_cfg);

    BenchConfig sweep_cfg;
    std::string sweep_param = "width";
    std::vector<int> sweep_values;
    auto* sweep = app.add_subcommand("sweep", "run a benchmark over several widths or thread counts");
    add_bench_options(sweep, sweep_cfg);
    sweep->add_option("--param", sweep_param, "width or threads")
        ->check(CLI::IsMember({"width", "threads"}));
    sweep->add_option("--values", sweep_values, "comma-separated values")
        ->delimiter(',')
        ->required();

    std::string gen_spec;
    std::string gen_out;
    int gen_width = 8;
    auto* gen = app.add_subcommand("gen", "write the generated unit for a definition");
    gen->add_option("def", gen_spec, "registered coroutine name or definition file")->required();
    gen->add_option("-o,--output", gen_out, "output file (default <name>.gen.hpp)");
    gen->add_option("-w,--width", gen_width, "default width of the batched units")
        ->check(CLI::PositiveNumber);

    std::string dump_spec;
    auto* dump = app.add_subcommand("dump", "print a definition, its states and its context");
    dump->add_option("def", dump_spec, "registered coroutine name or definition file")->required();

    std::uint64_t st_seed = 1;
    std::uint64_t st_queries = 20000;
    std::uint64_t st_bytes = 4 << 20;
    auto* self = app.add_subcommand("selftest", "check every kernel and schedule against references");
    self->add_option("--seed", st_seed);
    self->add_option("--queries", st_queries);
    self->add_option("--size", st_bytes)->transform(CLI::AsSizeValue(false));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*bench) {
            auto rows = coil::bench::run_bench(bench_cfg, &std::cerr);
            coil::bench::write_rows(std::cout, rows, bench_cfg.format);
            return 0;
        }
        if (*sweep)
            return run_sweep(sweep_cfg, sweep_param, sweep_values);
        if (*gen)
            return coil::tools::run_gen(gen_spec, gen_out, gen_width, std::cerr);
        if (*dump)
            return run_dump(dump_spec);
        if (*self) {
            bool ok = true;
            for (const auto& c : coil::bench::selftest(st_seed, st_queries, st_bytes)) {
                std::cout << (c.ok ? "ok   " : "FAIL ") << c.kernel << ' ' << c.variant << ' '
                          << c.policy << " w=" << c.width;
                if (!c.ok)
                    std::cout << " (" << c.mismatches << " mismatches)";
                std::cout << '\n';
                ok = ok && c.ok;
            }
            return ok ? 0 : 1;
        }
    } catch (const coil::runtime::ConfigError& e) {
        std::cerr << "coil: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "coil: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
