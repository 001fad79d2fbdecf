#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "bench.hpp"

namespace bn = coil::bench;
using coil::runtime::ConfigError;
using coil::runtime::Policy;

namespace {

bn::BenchConfig small(const std::string& kernel)
{
    bn::BenchConfig c;
    c.kernel = kernel;
    c.dataset_bytes = 1 << 20;
    c.queries = 5000;
    c.hit_rate = 0.5;
    c.iter_limit = 20;
    c.pin = false;
    return c;
}

std::uint64_t aggregate_checksum(const std::vector<bn::BenchRow>& rows)
{
    return rows.back().checksum;
}

} // namespace

TEST(BenchConfig, Validation)
{
    auto c = small("ht");
    EXPECT_NO_THROW(c.check());
    c.kernel = "nope";
    EXPECT_THROW(c.check(), ConfigError);
    c = small("bt");
    c.sched.policy = Policy::StaticBatch;
    EXPECT_THROW(c.check(), ConfigError);
    c.variant = bn::Variant::Baseline;
    EXPECT_NO_THROW(c.check());
    c = small("ht");
    c.sched.width = 0;
    EXPECT_THROW(c.check(), ConfigError);
    c.sched.width = 7;
    EXPECT_NO_THROW(c.check());
    c.sched.policy = Policy::Hybrid;
    EXPECT_THROW(c.check(), ConfigError);
    c = small("ht");
    c.threads = 0;
    EXPECT_THROW(c.check(), ConfigError);
    c = small("ht");
    c.hit_rate = 1.5;
    EXPECT_THROW(c.check(), ConfigError);
}

TEST(BenchConfig, RejectsRunsThatDoNotFitInMemory)
{
    auto c = small("ht");
    c.dataset_bytes = std::uint64_t{1} << 50;
    EXPECT_THROW(bn::make_workload(c), ConfigError);
}

TEST(Bench, ChecksumsAgreeAcrossVariantsAndPolicies)
{
    for (auto k : bn::kKernels) {
        auto c = small(std::string(k));
        c.variant = bn::Variant::Baseline;
        auto w = bn::make_workload(c);
        auto want = aggregate_checksum(bn::execute(*w, c));
        EXPECT_NE(want, 0u);
        c.variant = bn::Variant::Coro;
        for (Policy p : {Policy::DynamicRefill, Policy::PushPull, Policy::Hybrid, Policy::StaticBatch}) {
            if (p == Policy::StaticBatch && k != "ht")
                continue;
            for (int width : {1, 16, 48}) {
                c.sched.policy = p;
                c.sched.width = width;
                EXPECT_EQ(aggregate_checksum(bn::execute(*w, c)), want)
                    << k << " " << coil::runtime::to_string(p) << " " << width;
            }
        }
    }
}

TEST(Bench, ChecksumDoesNotDependOnThreadCount)
{
    for (auto k : {"bs", "bt", "cht"}) {
        auto c = small(k);
        auto w = bn::make_workload(c, 3);
        auto one = bn::execute(*w, c);
        c.threads = 3;
        auto three = bn::execute(*w, c);
        ASSERT_EQ(three.size(), 4u);
        EXPECT_EQ(aggregate_checksum(three), aggregate_checksum(one)) << k;
        std::uint64_t q = 0, sum = 0;
        for (int t = 0; t < 3; ++t) {
            EXPECT_EQ(three[t].scope, "thread" + std::to_string(t));
            q += three[t].queries;
            sum += three[t].checksum;
        }
        EXPECT_EQ(q, c.queries);
        EXPECT_EQ(sum, three.back().checksum);
    }
}

TEST(Bench, DigestsMatchReference)
{
    for (auto k : bn::kKernels) {
        auto c = small(std::string(k));
        auto w = bn::make_workload(c);
        std::vector<std::uint64_t> got, want(w->queries());
        bn::execute(*w, c, &got);
        w->reference(0, want.size(), want.data());
        EXPECT_EQ(got, want) << k;
    }
}

TEST(Bench, ZeroQueriesGivesZeros)
{
    auto c = small("sl");
    c.queries = 0;
    auto rows = bn::run_bench(c);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) {
        EXPECT_EQ(r.queries, 0u);
        EXPECT_EQ(r.checksum, 0u);
        EXPECT_EQ(r.ops_per_sec, 0.0);
    }
}

TEST(Bench, BaselineRowsReportNoScheduler)
{
    auto c = small("bs");
    c.variant = bn::Variant::Baseline;
    c.sched.width = 32;
    auto rows = bn::run_bench(c);
    EXPECT_EQ(rows.back().policy, "none");
    EXPECT_EQ(rows.back().width, 1);
    EXPECT_EQ(rows.back().variant, "baseline");
}

TEST(Output, CsvHeaderAndLine)
{
    EXPECT_STREQ(bn::kCsvHeader,
                 "kernel,variant,policy,width,threads,seed,queries,ops_per_sec,total_ns,checksum,scope");
    bn::BenchRow r{"ht", "coro", "dynamic", 48, 1, 7, 100, 2.5e6, 40000, 12345, "aggregate"};
    EXPECT_EQ(bn::csv_line(r), "ht,coro,dynamic,48,1,7,100,2500000.0,40000,12345,aggregate");
    std::ostringstream out;
    bn::write_rows(out, {r}, bn::Format::Csv);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), bn::kCsvHeader);
}

TEST(Output, JsonRows)
{
    bn::BenchRow r{"bt", "baseline", "none", 1, 2, 3, 4, 5.0, 6, 7, "thread1"};
    auto j = bn::to_json(r);
    EXPECT_EQ(j["kernel"], "bt");
    EXPECT_EQ(j["width"], 1);
    EXPECT_EQ(j["checksum"], 7u);
    EXPECT_EQ(j["scope"], "thread1");
    std::ostringstream out;
    bn::write_rows(out, {r, r}, bn::Format::Json);
    auto parsed = nlohmann::json::parse(out.str());
    ASSERT_TRUE(parsed.is_array());
    EXPECT_EQ(parsed.size(), 2u);
}

TEST(Selftest, EveryCasePasses)
{
    auto cases = bn::selftest(3, 4000, 1 << 20);
    EXPECT_EQ(cases.size(), 6u + 6u * 9u + 3u);
    for (const auto& c : cases)
        EXPECT_TRUE(c.ok) << c.kernel << " " << c.variant << " " << c.policy << " " << c.width;
}
