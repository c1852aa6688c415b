#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "imasim/calibration.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("imasim_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

Outcome run(const std::string& args) {
    static int n = 0;
    const fs::path out = scratch() / ("out" + std::to_string(n) + ".txt");
    const fs::path err = scratch() / ("err" + std::to_string(n++) + ".txt");
    const std::string cmd = std::string("\"") + IMASIM_CLI + "\" " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Outcome r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

} // namespace

TEST(Cli, SimulateJson) {
    const Outcome r = run("simulate --plan hybrid --ports 4/4 --format json");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["gops"].get<double>(), 13.2, 13.2 * 0.25);
    EXPECT_EQ(j["plan"], "hybrid");
    EXPECT_EQ(j["macs"], 14'352'384);
}

TEST(Cli, SimulateTextNamesCalibration) {
    const Outcome r = run("simulate");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("# calibration:"), std::string::npos);
    EXPECT_NE(r.out.find("gops"), std::string::npos);
}

TEST(Cli, ValidationErrorsExitTwo) {
    EXPECT_EQ(run("simulate --plan turbo").code, 2);
    EXPECT_EQ(run("simulate --ports 3/3").code, 2);
    EXPECT_EQ(run("simulate --format yaml").code, 2);
    EXPECT_EQ(run("simulate --preset nope").code, 2);
    EXPECT_EQ(run("simulate --bogus-flag").code, 2);
    EXPECT_EQ(run("sweep --best speed").code, 2);
    EXPECT_EQ(run("").code, 2);
}

TEST(Cli, HelpExitsZero) {
    EXPECT_EQ(run("--help").code, 0);
    EXPECT_EQ(run("sweep --help").code, 0);
}

TEST(Cli, IoErrorsExitFour) {
    EXPECT_EQ(run("simulate --calibration /nonexistent/cal.json").code, 4);
    EXPECT_EQ(run("simulate --workload /nonexistent/w.json").code, 4);
    EXPECT_EQ(run("sweep --out /nonexistent/dir/x.csv").code, 4);
}

TEST(Cli, SweepCsvDeterministic) {
    const Outcome a = run("sweep");
    const Outcome b = run("sweep --sequential");
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(line_count(a.out), 21u);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out.rfind("plan,n_load,n_store,cycles_total", 0), 0u);
    EXPECT_NE(a.err.find("best by gops: hybrid"), std::string::npos);
}

TEST(Cli, SweepSubsetAndJson) {
    const Outcome r = run("sweep --plans sw,ima16 --port-list 1/1,4/4 --format json --best tops_per_w");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["rows"].size(), 4u);
    EXPECT_EQ(j["rows"][3]["plan"], "ima16");
    EXPECT_EQ(j["rows"][3]["n_load"], 4);
}

TEST(Cli, SweepWritesOutFile) {
    const auto p = scratch() / "sweep.csv";
    const Outcome r = run("sweep --out " + p.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(line_count(slurp(p)), 21u);
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, VerifyPassesAndIsSeeded) {
    const Outcome a = run("verify --seed 20240601 --cases 1000");
    ASSERT_EQ(a.code, 0) << a.out << a.err;
    EXPECT_NE(a.out.find("PASS 1000/1000"), std::string::npos);
    EXPECT_EQ(run("verify --seed 20240601 --cases 1000").out, a.out);
    const Outcome z = run("verify --cases 0");
    EXPECT_EQ(z.code, 0);
    EXPECT_NE(z.err.find("warning"), std::string::npos);
    EXPECT_EQ(run("verify --cases -3").code, 2);
}

TEST(Cli, DevicesRatios) {
    const Outcome r = run("devices");
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "policy,scope,devices_total,devices_useful,params,ratio,overhead_pct");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        if (line.rfind("c_job=8,no-stem-head,", 0) == 0) {
            const double ratio = std::stod(line.substr(line.rfind(',', line.rfind(',') - 1) + 1));
            EXPECT_NEAR(ratio, 1.25, 0.1);
        }
    }
    EXPECT_EQ(rows, 6);
}

TEST(Cli, ReportHasPerLayerRowsAndPlan) {
    const Outcome r = run("report --plan ima8 --ports 2/2");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("layer,target,depthwise"), std::string::npos);
    EXPECT_NE(r.out.find("\nTOTAL,"), std::string::npos);
    EXPECT_NE(r.out.find("dw-block(8)"), std::string::npos);
}

TEST(Cli, ScenarioConfig) {
    const auto p = scratch() / "scenario.json";
    std::ofstream(p) << R"({"schema_version": 1, "workload": "baseline-conv", "plan": "ima8", "ports": "1/1",
                           "format": "json"})";
    const Outcome r = run("simulate --config " + p.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["workload"], "baseline-conv");
    EXPECT_EQ(j["macs"], 4'718'592);
    const auto bad = scratch() / "bad_scenario.json";
    std::ofstream(bad) << R"({"schema_version": 1, "plans": "sw"})";
    EXPECT_EQ(run("simulate --config " + bad.string()).code, 2);
}

TEST(Cli, OverridesListedAndApplied) {
    const Outcome help = run("simulate --help");
    for (const auto& f : imasim::calibration_fields()) EXPECT_NE(help.out.find(f.path()), std::string::npos) << f.path();

    const Outcome base = run("simulate --plan sw --format json");
    const Outcome slow = run("simulate --plan sw --format json --set cluster.eta_dw=0.05");
    ASSERT_EQ(slow.code, 0) << slow.err;
    EXPECT_GT(nlohmann::json::parse(slow.out)["cycles"]["total"].get<long long>(),
              nlohmann::json::parse(base.out)["cycles"]["total"].get<long long>());
    EXPECT_EQ(run("simulate --set cluster.eta_dw=2").code, 2);
    EXPECT_EQ(run("simulate --set nothing=1").code, 2);
}

TEST(Cli, CalibrationRoundTripsThroughFile) {
    const auto p = scratch() / "cal.json";
    ASSERT_EQ(run("calibration --set cluster.eta_dw=0.2 --out " + p.string()).code, 0);
    const Outcome r = run("simulate --plan sw --format json --calibration " + p.string());
    const Outcome o = run("simulate --plan sw --format json --set cluster.eta_dw=0.2");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out)["cycles"], nlohmann::json::parse(o.out)["cycles"]);
}
