#pragma once

// Sweeps over port configurations and execution plans, best-point
// selection and CSV/JSON emission.

#include <charconv>
#include <future>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "imasim/calibration.hpp"
#include "imasim/metrics.hpp"
#include "imasim/timing.hpp"
#include "imasim/workload.hpp"

namespace imasim::dse {

using timing::PlanSpec;
using timing::PortConfig;

[[nodiscard]] inline std::vector<PortConfig> default_ports() { return {{1, 1}, {2, 2}, {4, 4}, {8, 8}, {16, 16}}; }

[[nodiscard]] inline std::vector<PlanSpec> default_plans() {
    return {PlanSpec::software(), PlanSpec::ima(8), PlanSpec::ima(16), PlanSpec::hybrid()};
}

struct SweepSpec {
    NetworkDescriptor workload = default_bottleneck().to_network();
    std::vector<PortConfig> ports = default_ports();
    std::vector<PlanSpec> plans = default_plans();
    Calibration calibration;
    bool parallel = true;

    void validate() const {
        require(!ports.empty() && !plans.empty(), ErrorCode::Validation, "sweep needs at least one plan and one port config");
        for (const auto& p : ports) p.validate();
        calibration.validate();
        workload.validate_chain();
    }
};

struct SweepRow {
    std::string plan;
    PortConfig ports;
    Count cycles_total = 0;
    Count cycles_streamin = 0;
    Count cycles_compute = 0;
    Count cycles_streamout = 0;
    Count cycles_sw = 0;
    Count cycles_marshal = 0;
    Count cycles_config = 0;
    double gops = 0.0;
    double tops_per_w = 0.0;
    double gops_per_mm2_pcm = 0.0;
    double gops_per_mm2_full = 0.0;

    friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

[[nodiscard]] inline SweepRow make_row(const timing::ScheduleResult& s, const metrics::MetricsReport& m) {
    SweepRow r;
    r.plan = s.plan;
    r.ports = s.ports;
    r.cycles_total = s.total_cycles();
    r.cycles_streamin = s.totals.streamin;
    r.cycles_compute = s.totals.compute;
    r.cycles_streamout = s.totals.streamout;
    r.cycles_sw = s.totals.sw;
    r.cycles_marshal = s.totals.marshal;
    r.cycles_config = s.totals.config;
    r.gops = m.gops;
    r.tops_per_w = m.tops_per_w;
    r.gops_per_mm2_pcm = m.gops_per_mm2_pcm;
    r.gops_per_mm2_full = m.gops_per_mm2_full;
    return r;
}

[[nodiscard]] inline SweepRow evaluate(const NetworkDescriptor& net, const PlanSpec& plan, const PortConfig& ports,
                                       const Calibration& cal) {
    const timing::ScheduleResult s = timing::schedule(net, plan, ports, cal.cluster, cal.ima);
    return make_row(s, metrics::report(s, cal.area, cal.energy));
}

/// Plan-major, ports-minor. Points may be evaluated concurrently; the table
/// order never depends on completion order.
[[nodiscard]] inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    spec.validate();
    std::vector<SweepRow> rows;
    rows.reserve(spec.plans.size() * spec.ports.size());
    if (!spec.parallel) {
        for (const auto& plan : spec.plans)
            for (const auto& ports : spec.ports) rows.push_back(evaluate(spec.workload, plan, ports, spec.calibration));
        return rows;
    }
    std::vector<std::future<SweepRow>> pending;
    for (const auto& plan : spec.plans)
        for (const auto& ports : spec.ports)
            pending.push_back(std::async(std::launch::async, [&spec, plan, ports] {
                return evaluate(spec.workload, plan, ports, spec.calibration);
            }));
    for (auto& f : pending) rows.push_back(f.get());
    return rows;
}

enum class Metric { Gops, TopsPerW, GopsPerMm2Pcm, GopsPerMm2Full, Cycles };

[[nodiscard]] inline Metric parse_metric(std::string_view s) {
    if (s == "gops") return Metric::Gops;
    if (s == "tops_per_w") return Metric::TopsPerW;
    if (s == "gops_per_mm2_pcm") return Metric::GopsPerMm2Pcm;
    if (s == "gops_per_mm2_full") return Metric::GopsPerMm2Full;
    if (s == "cycles_total") return Metric::Cycles;
    throw Error(ErrorCode::Validation, "unknown metric '" + std::string(s) + "'");
}

/// Larger is better except for cycles.
[[nodiscard]] inline double score(const SweepRow& r, Metric m) noexcept {
    switch (m) {
    case Metric::Gops: return r.gops;
    case Metric::TopsPerW: return r.tops_per_w;
    case Metric::GopsPerMm2Pcm: return r.gops_per_mm2_pcm;
    case Metric::GopsPerMm2Full: return r.gops_per_mm2_full;
    case Metric::Cycles: return -static_cast<double>(r.cycles_total);
    }
    return 0.0;
}

/// Argmax; ties go to fewer ports, then to the earlier row (plan order).
[[nodiscard]] inline const SweepRow& best_by(const std::vector<SweepRow>& table, Metric m) {
    require(!table.empty(), ErrorCode::Validation, "best_by on an empty table");
    const SweepRow* best = &table.front();
    for (const SweepRow& r : table) {
        const double a = score(r, m), b = score(*best, m);
        if (a > b || (a == b && r.ports.n_load + r.ports.n_store < best->ports.n_load + best->ports.n_store))
            best = &r;
    }
    return *best;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

inline constexpr const char* kCsvHeader =
    "plan,n_load,n_store,cycles_total,cycles_streamin,cycles_compute,cycles_streamout,cycles_sw,cycles_marshal,"
    "gops,tops_per_w,gops_per_mm2_pcm,gops_per_mm2_full,cycles_config";

/// Locale-independent fixed-point formatting.
[[nodiscard]] inline std::string format_fixed(double v, int precision = 6) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
    return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

inline void write_csv(std::ostream& os, const std::vector<SweepRow>& table) {
    os << kCsvHeader << '\n';
    for (const SweepRow& r : table) {
        os << r.plan << ',' << r.ports.n_load << ',' << r.ports.n_store << ',' << r.cycles_total << ','
           << r.cycles_streamin << ',' << r.cycles_compute << ',' << r.cycles_streamout << ',' << r.cycles_sw << ','
           << r.cycles_marshal << ',' << format_fixed(r.gops) << ',' << format_fixed(r.tops_per_w) << ','
           << format_fixed(r.gops_per_mm2_pcm) << ',' << format_fixed(r.gops_per_mm2_full) << ','
           << r.cycles_config << '\n';
    }
}

[[nodiscard]] inline nlohmann::ordered_json to_json(const SweepRow& r) {
    nlohmann::ordered_json j;
    j["plan"] = r.plan;
    j["n_load"] = r.ports.n_load;
    j["n_store"] = r.ports.n_store;
    j["cycles_total"] = r.cycles_total;
    j["cycles_streamin"] = r.cycles_streamin;
    j["cycles_compute"] = r.cycles_compute;
    j["cycles_streamout"] = r.cycles_streamout;
    j["cycles_sw"] = r.cycles_sw;
    j["cycles_marshal"] = r.cycles_marshal;
    j["gops"] = r.gops;
    j["tops_per_w"] = r.tops_per_w;
    j["gops_per_mm2_pcm"] = r.gops_per_mm2_pcm;
    j["gops_per_mm2_full"] = r.gops_per_mm2_full;
    j["cycles_config"] = r.cycles_config;
    return j;
}

[[nodiscard]] inline nlohmann::ordered_json to_json(const std::vector<SweepRow>& table) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : table) j["rows"].push_back(to_json(r));
    return j;
}

[[nodiscard]] inline std::vector<SweepRow> table_from_json(const nlohmann::json& j) {
    require(j.is_object() && j.contains("rows") && j["rows"].is_array(), ErrorCode::Validation,
            "sweep table needs a 'rows' array");
    std::vector<SweepRow> out;
    try {
        for (const auto& e : j["rows"]) {
            SweepRow r;
            r.plan = e.at("plan").get<std::string>();
            r.ports = {e.at("n_load").get<Count>(), e.at("n_store").get<Count>()};
            r.cycles_total = e.at("cycles_total").get<Count>();
            r.cycles_streamin = e.at("cycles_streamin").get<Count>();
            r.cycles_compute = e.at("cycles_compute").get<Count>();
            r.cycles_streamout = e.at("cycles_streamout").get<Count>();
            r.cycles_sw = e.at("cycles_sw").get<Count>();
            r.cycles_marshal = e.at("cycles_marshal").get<Count>();
            r.cycles_config = e.value("cycles_config", Count{0});
            r.gops = e.at("gops").get<double>();
            r.tops_per_w = e.at("tops_per_w").get<double>();
            r.gops_per_mm2_pcm = e.at("gops_per_mm2_pcm").get<double>();
            r.gops_per_mm2_full = e.at("gops_per_mm2_full").get<double>();
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Validation, std::string("sweep table: ") + e.what());
    }
    return out;
}

enum class Format { Csv, Json };

[[nodiscard]] inline Format parse_format(std::string_view s) {
    if (s == "csv") return Format::Csv;
    if (s == "json") return Format::Json;
    throw Error(ErrorCode::Validation, "unknown format '" + std::string(s) + "' (csv, json)");
}

inline void emit(std::ostream& os, const std::vector<SweepRow>& table, Format f) {
    if (f == Format::Csv) write_csv(os, table);
    else os << to_json(table).dump(2) << '\n';
    if (!os) throw Error(ErrorCode::Io, "failed writing sweep table");
}

} // namespace imasim::dse
