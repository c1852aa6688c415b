// imasim: command-line front end for the simulator.
//
//   imasim simulate  --preset bottleneck --plan hybrid --ports 4/4
//   imasim sweep     --preset bottleneck --format csv --out sweep.csv
//   imasim verify    --seed 1 --cases 1000
//   imasim devices   --preset mobilenetv2
//   imasim report    --preset bottleneck --plan ima16 --ports 4/4
//   imasim calibration
//
// Exit codes: 0 ok, 2 validation error, 3 verification mismatch, 4 I/O error.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imasim/calibration.hpp"
#include "imasim/dse.hpp"
#include "imasim/mapper.hpp"
#include "imasim/metrics.hpp"
#include "imasim/scenario.hpp"
#include "imasim/timing.hpp"
#include "imasim/verify.hpp"
#include "imasim/workload_io.hpp"

namespace {

using namespace imasim;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitMismatch = 3;
constexpr int kExitIo = 4;

struct Options {
    std::string config;
    std::string preset;
    std::string workload_file;
    std::string plan;
    std::string ports;
    std::vector<std::string> plans;
    std::vector<std::string> port_list;
    std::string calibration;
    std::vector<std::string> overrides;
    std::string format;
    std::string out;
    std::string best = "gops";
    std::vector<Count> c_jobs{8, 16};
    std::uint64_t seed = 0;
    std::optional<Count> cases;
    bool sequential = false;
    bool seed_set = false;
};

std::string override_help() {
    std::ostringstream os;
    os << "Calibration override section.key=value (repeatable). Keys:";
    const Calibration defaults;
    for (const auto& f : calibration_fields()) {
        Calibration c = defaults;
        os << "\n  " << f.path() << " = ";
        std::visit([&](auto* p) { os << std::boolalpha << *p; }, f.ref(c));
        os << "  (" << f.help << ")";
    }
    return os.str();
}

/// Scenario file first, then individual flags on top.
ScenarioConfig resolve(const Options& o) {
    ScenarioConfig s = o.config.empty() ? ScenarioConfig{} : load_scenario(o.config);
    require(o.preset.empty() || o.workload_file.empty(), ErrorCode::Validation,
            "--preset and --workload are mutually exclusive");
    if (!o.preset.empty()) {
        s.workload_label = o.preset;
        s.workload = io::preset(o.preset);
    }
    if (!o.workload_file.empty()) {
        s.workload = io::workload_from_json(io::read_json_file(o.workload_file));
        s.workload_label = s.workload.name;
    }
    if (!o.plan.empty()) s.plan = timing::PlanSpec::parse(o.plan);
    if (!o.ports.empty()) s.ports = timing::PortConfig::parse(o.ports);
    if (!o.plans.empty()) {
        s.sweep_plans.clear();
        for (const auto& p : o.plans) s.sweep_plans.push_back(timing::PlanSpec::parse(p));
    }
    if (!o.port_list.empty()) {
        s.sweep_ports.clear();
        for (const auto& p : o.port_list) s.sweep_ports.push_back(timing::PortConfig::parse(p));
    }
    if (!o.calibration.empty()) s.calibration_path = o.calibration;
    for (const auto& ov : o.overrides) s.overrides.push_back(ov);
    if (o.seed_set) s.seed = o.seed;
    if (o.cases) s.cases = *o.cases;
    if (!o.format.empty()) s.format = o.format;
    if (!o.out.empty()) s.out = o.out;
    return s;
}

/// Writes to the --out path or stdout.
template <typename F>
void with_output(const ScenarioConfig& s, F&& write) {
    if (!s.out) {
        write(std::cout);
        return;
    }
    std::ofstream f(*s.out);
    if (!f) throw Error(ErrorCode::Io, "cannot open '" + *s.out + "' for writing");
    write(f);
    f.flush();
    if (!f) throw Error(ErrorCode::Io, "failed writing '" + *s.out + "'");
}

std::string calibration_label(const ScenarioConfig& s) {
    std::string label = s.calibration_path ? *s.calibration_path : "built-in defaults";
    if (!s.overrides.empty()) label += " + " + std::to_string(s.overrides.size()) + " override(s)";
    return label + " (eta_dw, area and energy constants are fitted)";
}

nlohmann::ordered_json phases_json(const timing::PhaseBreakdown& p) {
    return {{"streamin", p.streamin}, {"compute", p.compute}, {"streamout", p.streamout},
            {"config", p.config},     {"sw", p.sw},           {"marshal", p.marshal},
            {"total", p.total()}};
}

const char* target_name(timing::Target t) {
    switch (t) {
    case timing::Target::Ima: return "ima";
    case timing::Target::Cores: return "cores";
    case timing::Target::Residual: return "residual";
    }
    return "?";
}

int cmd_simulate(const Options& o) {
    const ScenarioConfig s = resolve(o);
    const Calibration cal = s.calibration();
    const std::string format = s.format.value_or("text");
    require(format == "text" || format == "csv" || format == "json", ErrorCode::Validation,
            "unknown format '" + format + "' (text, csv, json)");
    const timing::ScheduleResult r = timing::schedule(s.workload, s.plan, s.ports, cal.cluster, cal.ima);
    const metrics::MetricsReport m = metrics::report(r, cal.area, cal.energy);
    const metrics::EnergyBreakdown e = metrics::energy(r, cal.energy);

    with_output(s, [&](std::ostream& os) {
        if (format == "csv") {
            dse::write_csv(os, {dse::make_row(r, m)});
            return;
        }
        if (format == "json") {
            nlohmann::ordered_json j;
            j["workload"] = s.workload_label;
            j["plan"] = m.plan;
            j["ports"] = m.ports.to_string();
            j["calibration"] = calibration_label(s);
            j["macs"] = m.macs;
            j["cycles"] = phases_json(r.totals);
            j["wall_time_s"] = m.wall_time_s;
            j["energy_j"] = m.energy_j;
            j["pcm_area_mm2"] = m.pcm_area_mm2;
            j["full_area_mm2"] = m.full_area_mm2;
            j["gops"] = m.gops;
            j["tops_per_w"] = m.tops_per_w;
            j["gops_per_mm2_pcm"] = m.gops_per_mm2_pcm;
            j["gops_per_mm2_full"] = m.gops_per_mm2_full;
            os << j.dump(2) << '\n';
            return;
        }
        os << "# imasim simulate\n"
           << "# calibration: " << calibration_label(s) << "\n"
           << "workload          " << s.workload_label << " (" << s.workload.layers.size() << " layers)\n"
           << "plan              " << m.plan << "\n"
           << "ports             " << m.ports.to_string() << "\n"
           << "macs              " << m.macs << "\n"
           << "cycles_total      " << m.total_cycles << "\n"
           << "  streamin        " << r.totals.streamin << "\n"
           << "  compute         " << r.totals.compute << "\n"
           << "  streamout       " << r.totals.streamout << "\n"
           << "  config          " << r.totals.config << "\n"
           << "  sw              " << r.totals.sw << "\n"
           << "  marshal         " << r.totals.marshal << "\n"
           << "wall_time_us      " << dse::format_fixed(m.wall_time_s * 1e6, 3) << "\n"
           << "energy_uj         " << dse::format_fixed(m.energy_j * 1e6, 4) << "\n"
           << "  stream          " << dse::format_fixed(e.stream_j * 1e6, 4) << "\n"
           << "  jobs            " << dse::format_fixed(e.jobs_j * 1e6, 4) << "\n"
           << "  cores           " << dse::format_fixed(e.cores_j * 1e6, 4) << "\n"
           << "  static          " << dse::format_fixed(e.static_j * 1e6, 4) << "\n"
           << "  ports           " << dse::format_fixed(e.ports_j * 1e6, 4) << "\n"
           << "pcm_area_mm2      " << dse::format_fixed(m.pcm_area_mm2, 6) << "\n"
           << "full_area_mm2     " << dse::format_fixed(m.full_area_mm2, 6) << "\n"
           << "gops              " << dse::format_fixed(m.gops, 3) << "\n"
           << "tops_per_w        " << dse::format_fixed(m.tops_per_w, 3) << "\n"
           << "gops_per_mm2_pcm  " << dse::format_fixed(m.gops_per_mm2_pcm, 3) << "\n"
           << "gops_per_mm2_full " << dse::format_fixed(m.gops_per_mm2_full, 3) << "\n";
    });
    return kExitOk;
}

int cmd_sweep(const Options& o) {
    const ScenarioConfig s = resolve(o);
    dse::SweepSpec spec;
    spec.workload = s.workload;
    spec.plans = s.sweep_plans;
    spec.ports = s.sweep_ports;
    spec.calibration = s.calibration();
    spec.parallel = !o.sequential;
    const dse::Format format = dse::parse_format(s.format.value_or("csv"));
    const dse::Metric metric = dse::parse_metric(o.best);
    const auto table = dse::run_sweep(spec);
    with_output(s, [&](std::ostream& os) { dse::emit(os, table, format); });
    const dse::SweepRow& best = dse::best_by(table, metric);
    std::cerr << "best by " << o.best << ": " << best.plan << " " << best.ports.to_string() << "\n";
    return kExitOk;
}

int cmd_verify(const Options& o) {
    const ScenarioConfig s = resolve(o);
    require(s.cases >= 0, ErrorCode::Validation, "--cases must be >= 0");
    if (s.cases == 0) std::cerr << "warning: zero cases requested, nothing verified\n";
    const verify::SuiteResult r = verify::run_random_suite(s.seed, s.cases);
    with_output(s, [&](std::ostream& os) {
        os << "seed " << r.seed << "\n"
           << "cases " << r.cases << " (standard " << r.standard << ", pointwise " << r.pointwise << ", depthwise "
           << r.depthwise << ")\n"
           << "padded depthwise groups " << r.padded_groups << ", padded borders " << r.border_cases << "\n";
        for (const auto& f : r.failures) os << "FAIL " << f << "\n";
        os << (r.ok() ? "PASS" : "FAIL") << " " << r.passed << "/" << r.cases << "\n";
    });
    return r.ok() ? kExitOk : kExitMismatch;
}

int cmd_devices(const Options& o) {
    Options with_default = o;
    if (o.preset.empty() && o.workload_file.empty() && o.config.empty()) with_default.preset = "mobilenetv2";
    const ScenarioConfig s = resolve(with_default);
    const std::string format = s.format.value_or("csv");
    require(format == "csv" || format == "json", ErrorCode::Validation, "unknown format '" + format + "' (csv, json)");

    struct Row {
        std::string policy;
        std::string scope;
        mapper::DeviceCount d;
    };
    std::vector<Row> rows;
    std::vector<std::pair<std::string, mapper::LayerPolicy>> policies{{"full-diagonal", mapper::full_diagonal_policy()}};
    for (Count c : o.c_jobs) {
        require(c >= 1, ErrorCode::Validation, "--c-job values must be >= 1");
        policies.emplace_back("c_job=" + std::to_string(c), mapper::uniform_policy(c));
    }
    for (const auto& [name, policy] : policies) {
        rows.push_back({name, "all", mapper::network_device_count(s.workload, policy, true)});
        rows.push_back({name, "no-stem-head", mapper::network_device_count(s.workload, policy, false)});
    }

    with_output(s, [&](std::ostream& os) {
        if (format == "json") {
            nlohmann::ordered_json j = nlohmann::ordered_json::array();
            for (const auto& r : rows)
                j.push_back({{"policy", r.policy}, {"scope", r.scope}, {"devices_total", r.d.devices_total},
                             {"devices_useful", r.d.devices_useful}, {"params", r.d.params}, {"ratio", r.d.ratio}});
            os << j.dump(2) << '\n';
            return;
        }
        os << "policy,scope,devices_total,devices_useful,params,ratio,overhead_pct\n";
        for (const auto& r : rows)
            os << r.policy << ',' << r.scope << ',' << r.d.devices_total << ',' << r.d.devices_useful << ','
               << r.d.params << ',' << dse::format_fixed(r.d.ratio, 4) << ','
               << dse::format_fixed((r.d.ratio - 1.0) * 100.0, 2) << '\n';
    });
    return kExitOk;
}

int cmd_report(const Options& o) {
    const ScenarioConfig s = resolve(o);
    const Calibration cal = s.calibration();
    const timing::ScheduleResult r = timing::schedule(s.workload, s.plan, s.ports, cal.cluster, cal.ima);
    with_output(s, [&](std::ostream& os) {
        os << "# per-layer cycles: " << s.workload_label << ", plan " << r.plan << ", ports " << r.ports.to_string()
           << "\n";
        os << "layer,target,depthwise,macs,jobs,streamin,compute,streamout,config,sw,marshal,total\n";
        for (const auto& l : r.layers) {
            const auto& p = l.phases;
            os << l.name << ',' << target_name(l.target) << ',' << (l.depthwise ? 1 : 0) << ',' << l.macs << ','
               << l.jobs << ',' << p.streamin << ',' << p.compute << ',' << p.streamout << ',' << p.config << ','
               << p.sw << ',' << p.marshal << ',' << p.total() << '\n';
        }
        const auto& t = r.totals;
        os << "TOTAL,,," << r.macs << ",," << t.streamin << ',' << t.compute << ',' << t.streamout << ','
           << t.config << ',' << t.sw << ',' << t.marshal << ',' << t.total() << "\n\n";
        os << "# crossbar plan\n";
        mapper::write_plan(os, r.allocations);
    });
    return kExitOk;
}

int cmd_calibration(const Options& o) {
    const ScenarioConfig s = resolve(o);
    const Calibration cal = s.calibration();
    with_output(s, [&](std::ostream& os) { os << to_json(cal).dump(2) << '\n'; });
    return kExitOk;
}

void add_workload_flags(CLI::App* c, Options& o) {
    c->add_option("--config", o.config, "Scenario JSON file (schema_version 1)");
    c->add_option("--preset", o.preset, "Built-in workload")
        ->check(CLI::IsMember({"bottleneck", "baseline-conv", "mobilenetv2"}));
    c->add_option("--workload", o.workload_file, "Workload descriptor JSON file");
}

void add_calibration_flags(CLI::App* c, Options& o) {
    c->add_option("--calibration", o.calibration, "Calibration JSON file");
    c->add_option("--set", o.overrides, override_help());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Analog in-memory accelerator simulator and design-space explorer"};
    app.require_subcommand(1);
    Options o;

    auto* sim = app.add_subcommand("simulate", "Single-point run: cycles, energy, area and efficiency");
    add_workload_flags(sim, o);
    add_calibration_flags(sim, o);
    sim->add_option("--plan", o.plan, "Execution plan: sw, hybrid, ima<N>");
    sim->add_option("--ports", o.ports, "Port configuration N/M (N, M in 1, 2, 4, 8, 16)");
    sim->add_option("--format", o.format, "text, csv or json");
    sim->add_option("--out", o.out, "Output file (default stdout)");

    auto* sweep = app.add_subcommand("sweep", "Sweep plans x port configurations");
    add_workload_flags(sweep, o);
    add_calibration_flags(sweep, o);
    sweep->add_option("--plans", o.plans, "Plans to sweep (default sw,ima8,ima16,hybrid)")->delimiter(',');
    sweep->add_option("--port-list", o.port_list, "Port configs to sweep (default 1/1,2/2,4/4,8/8,16/16)")
        ->delimiter(',');
    sweep->add_option("--format", o.format, "csv or json");
    sweep->add_option("--out", o.out, "Output file (default stdout)");
    sweep->add_option("--best", o.best, "Metric reported as best point on stderr")
        ->check(CLI::IsMember({"gops", "tops_per_w", "gops_per_mm2_pcm", "gops_per_mm2_full", "cycles_total"}));
    sweep->add_flag("--sequential", o.sequential, "Evaluate sweep points on one thread");

    auto* ver = app.add_subcommand("verify", "Randomized golden-model equivalence suite");
    ver->add_option("--config", o.config, "Scenario JSON file (schema_version 1)");
    ver->add_option("--seed", o.seed, "Random seed (default 1)")->each([&](const std::string&) { o.seed_set = true; });
    ver->add_option("--cases", o.cases, "Number of random layers (default 1000)");
    ver->add_option("--out", o.out, "Output file (default stdout)");

    auto* dev = app.add_subcommand("devices", "Crossbar device counts under depthwise mapping policies");
    add_workload_flags(dev, o);
    dev->add_option("--c-job", o.c_jobs, "Uniform c_job policies to report (default 8,16)")->delimiter(',');
    dev->add_option("--format", o.format, "csv or json");
    dev->add_option("--out", o.out, "Output file (default stdout)");

    auto* rep = app.add_subcommand("report", "Per-layer cycle table and crossbar plan");
    add_workload_flags(rep, o);
    add_calibration_flags(rep, o);
    rep->add_option("--plan", o.plan, "Execution plan: sw, hybrid, ima<N>");
    rep->add_option("--ports", o.ports, "Port configuration N/M");
    rep->add_option("--out", o.out, "Output file (default stdout)");

    auto* calib = app.add_subcommand("calibration", "Print the effective calibration as JSON");
    add_calibration_flags(calib, o);
    calib->add_option("--out", o.out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (sim->parsed()) return cmd_simulate(o);
        if (sweep->parsed()) return cmd_sweep(o);
        if (ver->parsed()) return cmd_verify(o);
        if (dev->parsed()) return cmd_devices(o);
        if (rep->parsed()) return cmd_report(o);
        if (calib->parsed()) return cmd_calibration(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::Io ? kExitIo : kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
