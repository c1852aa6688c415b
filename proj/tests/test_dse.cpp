#include <algorithm>
#include <clocale>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "imasim/dse.hpp"

using namespace imasim;
using namespace imasim::dse;

namespace {

const std::vector<SweepRow>& default_table() {
    static const std::vector<SweepRow> t = run_sweep(SweepSpec{});
    return t;
}

std::string csv(const std::vector<SweepRow>& t) {
    std::ostringstream os;
    write_csv(os, t);
    return os.str();
}

const SweepRow& row(const std::string& plan, Count p) {
    for (const auto& r : default_table())
        if (r.plan == plan && r.ports.n_load == p) return r;
    throw std::runtime_error("row not found");
}

} // namespace

TEST(Sweep, TwentyRowsPlanMajor) {
    const auto& t = default_table();
    ASSERT_EQ(t.size(), 20u);
    const std::vector<std::string> plans{"sw", "ima8", "ima16", "hybrid"};
    const Count ports[] = {1, 2, 4, 8, 16};
    std::set<std::pair<std::string, Count>> seen;
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_EQ(t[i].plan, plans[i / 5]);
        EXPECT_EQ(t[i].ports.n_load, ports[i % 5]);
        EXPECT_EQ(t[i].ports.n_store, ports[i % 5]);
        EXPECT_TRUE(seen.insert({t[i].plan, t[i].ports.n_load}).second);
    }
}

TEST(Sweep, PhaseColumnsSumToTotal) {
    for (const auto& r : default_table())
        EXPECT_EQ(r.cycles_total, r.cycles_streamin + r.cycles_compute + r.cycles_streamout + r.cycles_sw +
                                      r.cycles_marshal + r.cycles_config);
}

TEST(Sweep, HybridGainsFlattenPastFourPorts) {
    EXPECT_LE(row("hybrid", 1).gops, row("hybrid", 2).gops);
    EXPECT_LE(row("hybrid", 2).gops, row("hybrid", 4).gops);
    const double to4 = row("hybrid", 4).gops - row("hybrid", 1).gops;
    const double past4 = row("hybrid", 16).gops - row("hybrid", 4).gops;
    EXPECT_GE(past4, 0.0);
    EXPECT_LT(past4, to4);
    EXPECT_LT(past4 / row("hybrid", 4).gops, 0.1);
}

TEST(Sweep, SoftwareRowsIdenticalAcrossPorts) {
    for (Count p : {2, 4, 8, 16}) {
        SweepRow a = row("sw", 1), b = row("sw", p);
        b.ports = a.ports;
        EXPECT_EQ(a, b);
    }
}

TEST(Sweep, ParallelAndSequentialAgree) {
    SweepSpec s;
    s.parallel = false;
    EXPECT_EQ(run_sweep(s), default_table());
    EXPECT_EQ(csv(run_sweep(SweepSpec{})), csv(default_table()));
}

TEST(Sweep, ValidateRejectsEmptyAxes) {
    SweepSpec s;
    s.ports.clear();
    EXPECT_THROW((void)run_sweep(s), Error);
    s = SweepSpec{};
    s.plans.clear();
    EXPECT_THROW((void)run_sweep(s), Error);
    s = SweepSpec{};
    s.ports = {{3, 3}};
    EXPECT_THROW((void)run_sweep(s), Error);
}

TEST(BestBy, Examples) {
    const auto& t = default_table();
    EXPECT_EQ(best_by(t, Metric::Gops).plan, "hybrid");
    const auto& eff = best_by(t, Metric::TopsPerW);
    EXPECT_TRUE(eff.ports.n_load == 4 || eff.ports.n_load == 2);
    EXPECT_EQ(best_by(t, Metric::Cycles).cycles_total, best_by(t, Metric::Gops).cycles_total);
    EXPECT_EQ(best_by({t[3]}, Metric::Gops), t[3]);
    EXPECT_THROW((void)best_by({}, Metric::Gops), Error);
}

TEST(BestBy, TiesPreferFewerPortsThenEarlierRow) {
    SweepRow a, b, c;
    a.plan = "a";
    a.ports = {8, 8};
    b.plan = "b";
    b.ports = {2, 2};
    c.plan = "c";
    c.ports = {2, 2};
    a.gops = b.gops = c.gops = 5.0;
    const std::vector<SweepRow> t{a, b, c};
    EXPECT_EQ(best_by(t, Metric::Gops).plan, "b");
}

TEST(ParseMetric, Names) {
    EXPECT_EQ(parse_metric("tops_per_w"), Metric::TopsPerW);
    EXPECT_EQ(parse_metric("cycles_total"), Metric::Cycles);
    EXPECT_THROW((void)parse_metric("speed"), Error);
    EXPECT_EQ(parse_format("json"), Format::Json);
    EXPECT_THROW((void)parse_format("xml"), Error);
}

TEST(Csv, HeaderAndRowCount) {
    const std::string s = csv(default_table());
    std::istringstream in(s);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    ASSERT_EQ(lines.size(), 21u);
    EXPECT_EQ(lines[0], kCsvHeader);
    EXPECT_EQ(lines[0].rfind("plan,n_load,n_store,cycles_total,cycles_streamin,cycles_compute,cycles_streamout,"
                             "cycles_sw,cycles_marshal,gops,tops_per_w,gops_per_mm2_pcm,gops_per_mm2_full",
                             0),
              0u);
    for (std::size_t i = 1; i < lines.size(); ++i)
        EXPECT_EQ(std::count(lines[i].begin(), lines[i].end(), ','), 13) << lines[i];
    EXPECT_EQ(csv({}), std::string(kCsvHeader) + "\n");
}

TEST(Csv, FixedSixDecimals) {
    EXPECT_EQ(format_fixed(15.6309), "15.630900");
    EXPECT_EQ(format_fixed(0.0), "0.000000");
    EXPECT_EQ(format_fixed(2.5, 2), "2.50");
}

TEST(Csv, LocaleIndependent) {
    const std::string before = csv(default_table());
    const char* set = std::setlocale(LC_ALL, "de_DE.UTF-8");
    if (!set) set = std::setlocale(LC_ALL, "fr_FR.UTF-8");
    const std::string after = csv(default_table());
    std::setlocale(LC_ALL, "C");
    EXPECT_EQ(before, after);
    EXPECT_EQ(after.find(";"), std::string::npos);
}

TEST(Json, RoundTrip) {
    const auto j = to_json(default_table());
    EXPECT_EQ(j["schema_version"], 1);
    EXPECT_EQ(j["rows"].size(), 20u);
    const auto back = table_from_json(nlohmann::json::parse(j.dump()));
    ASSERT_EQ(back.size(), 20u);
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].plan, default_table()[i].plan);
        EXPECT_EQ(back[i].cycles_total, default_table()[i].cycles_total);
        EXPECT_DOUBLE_EQ(back[i].gops, default_table()[i].gops);
    }
    EXPECT_THROW((void)table_from_json(nlohmann::json::object()), Error);
    EXPECT_THROW((void)table_from_json(nlohmann::json::parse(R"({"rows":[{"plan":"sw"}]})")), Error);
}

TEST(Emit, BothFormats) {
    std::ostringstream c, j;
    emit(c, default_table(), Format::Csv);
    emit(j, default_table(), Format::Json);
    EXPECT_EQ(c.str(), csv(default_table()));
    EXPECT_EQ(nlohmann::json::parse(j.str())["rows"].size(), 20u);
}

TEST(Sweep, OtherWorkloadsAndPortPairs) {
    SweepSpec s;
    s.workload = NetworkDescriptor{"baseline", {baseline_conv()}};
    s.plans = {PlanSpec::software(), PlanSpec::ima(8)};
    s.ports = {{1, 16}, {16, 1}};
    const auto t = run_sweep(s);
    ASSERT_EQ(t.size(), 4u);
    EXPECT_EQ(t[2].ports, (PortConfig{1, 16}));
    EXPECT_LT(t[3].cycles_total, t[2].cycles_total);
}
