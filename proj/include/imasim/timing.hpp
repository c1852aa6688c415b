#pragma once

// Cycle model of the cluster: IMA jobs (streamin -> compute -> streamout over
// N 32-bit TCDM ports), software kernels on the cores, layout marshalling and
// residual adds, composed into whole-workload schedules.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "imasim/error.hpp"
#include "imasim/mapper.hpp"
#include "imasim/workload.hpp"

namespace imasim::timing {

using mapper::MappingStrategy;
using mapper::Segment;

[[nodiscard]] constexpr bool is_supported_port_count(Count n) noexcept {
    return n == 1 || n == 2 || n == 4 || n == 8 || n == 16;
}

struct PortConfig {
    Count n_load = 1;
    Count n_store = 1;

    void validate() const {
        require(is_supported_port_count(n_load) && is_supported_port_count(n_store), ErrorCode::Validation,
                "port counts must be one of 1, 2, 4, 8, 16 (got " + to_string() + ")");
    }

    [[nodiscard]] std::string to_string() const {
        return std::to_string(n_load) + "/" + std::to_string(n_store);
    }

    /// Parses "N/M" or a bare "N" (meaning N/N).
    [[nodiscard]] static PortConfig parse(std::string_view text) {
        const auto to_count = [&](std::string_view s) {
            Count v = 0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || p != s.data() + s.size())
                throw Error(ErrorCode::Validation, "malformed port spec '" + std::string(text) + "'");
            return v;
        };
        PortConfig pc;
        if (const auto slash = text.find('/'); slash != std::string_view::npos) {
            pc.n_load = to_count(text.substr(0, slash));
            pc.n_store = to_count(text.substr(slash + 1));
        } else {
            pc.n_load = pc.n_store = to_count(text);
        }
        pc.validate();
        return pc;
    }

    friend bool operator==(const PortConfig&, const PortConfig&) = default;
};

struct ClusterConfig {
    Count n_cores = 8;
    double f_hz = 250e6;
    Count n_banks = 16;
    Count bank_width = 4;  // bytes per bank word and per port beat
    Count simd_macs_per_core_cycle = 4;
    double eta_conv = 0.55;  // SIMD utilization of SW standard/pointwise kernels
    double eta_dw = 0.165;   // fitted, not measured
    Count marshal_bytes_per_cycle = 8;
    double contention = 1.0;  // multiplicative stall factor on IMA streaming

    void validate() const {
        require(n_cores >= 1 && n_banks >= 1 && bank_width >= 1 && simd_macs_per_core_cycle >= 1 &&
                    marshal_bytes_per_cycle >= 1,
                ErrorCode::Validation, "cluster counts must be >= 1");
        require(f_hz > 0.0, ErrorCode::Validation, "f_hz must be > 0");
        require(eta_conv > 0.0 && eta_conv <= 1.0 && eta_dw > 0.0 && eta_dw <= 1.0, ErrorCode::Validation,
                "eta must lie in (0, 1]");
        require(contention >= 1.0, ErrorCode::Validation, "contention factor must be >= 1");
    }
};

struct ImaTiming {
    double t_array_ns = 70.0;
    Count cfg_overhead_cycles = 32;   // once per layer
    Count job_handshake_cycles = 4;   // per job trigger
    bool overlap_streamin_compute = false;

    void validate() const {
        require(t_array_ns >= 0.0, ErrorCode::Validation, "t_array_ns must be >= 0");
        require(cfg_overhead_cycles >= 0 && job_handshake_cycles >= 0, ErrorCode::Validation,
                "overhead cycles must be >= 0");
    }
};

struct PhaseBreakdown {
    Count streamin = 0;
    Count compute = 0;
    Count streamout = 0;
    Count config = 0;   // per-layer register programming plus per-job handshakes
    Count sw = 0;       // core-executed kernels (conv, depthwise, residual add)
    Count marshal = 0;  // HWC <-> CHW conversions around SW depthwise

    [[nodiscard]] Count total() const noexcept { return streamin + compute + streamout + config + sw + marshal; }

    PhaseBreakdown& operator+=(const PhaseBreakdown& o) noexcept {
        streamin += o.streamin;
        compute += o.compute;
        streamout += o.streamout;
        config += o.config;
        sw += o.sw;
        marshal += o.marshal;
        return *this;
    }
    friend bool operator==(const PhaseBreakdown&, const PhaseBreakdown&) = default;
};

[[nodiscard]] inline Count ceil_div(Count a, Count b) noexcept { return (a + b - 1) / b; }

/// Beats needed to fetch a job's receptive field over n_load ports.
[[nodiscard]] inline Count streamin_cycles(std::span<const Segment> segments, Count n_load, Count beat_bytes = 4) {
    Count cycles = 0;
    for (const Segment& s : segments)
        if (!s.zero_fill) cycles += ceil_div(s.length, beat_bytes * n_load);
    return cycles;
}

[[nodiscard]] inline Count streamout_cycles(const Segment& out, Count n_store, Count beat_bytes = 4) {
    return ceil_div(out.length, beat_bytes * n_store);
}

[[nodiscard]] inline Count compute_cycles(const ImaTiming& ima, double f_hz) {
    const double c = ima.t_array_ns * f_hz / 1e9;
    return static_cast<Count>(std::ceil(c - 1e-9));
}

struct OnIma {
    MappingStrategy strategy;
};
struct OnCores {};
using Assignment = std::variant<OnIma, OnCores>;

enum class Target { Ima, Cores, Residual };

struct LayerTiming {
    std::string name;
    Target target = Target::Cores;
    bool depthwise = false;
    PhaseBreakdown phases;
    Count macs = 0;
    Count jobs = 0;
    Count bytes_in = 0;
    Count bytes_out = 0;
};

[[nodiscard]] inline LayerTiming layer_cycles_ima(const ShapedLayer& l, const MappingStrategy& strategy,
                                                  const PortConfig& ports, const ImaTiming& ima,
                                                  const ClusterConfig& cluster) {
    ports.validate();
    ima.validate();
    const mapper::JobStream js = mapper::job_stream(l.layer, l.input, strategy);
    const Count compute = compute_cycles(ima, cluster.f_hz);

    LayerTiming t;
    t.name = l.name;
    t.target = Target::Ima;
    t.depthwise = is_depthwise(l.layer);
    t.macs = l.macs();
    t.jobs = static_cast<Count>(js.jobs.size());
    t.bytes_in = js.bytes_in();
    t.bytes_out = js.bytes_out();
    t.phases.config = ima.cfg_overhead_cycles + t.jobs * ima.job_handshake_cycles;
    for (const mapper::Job& j : js.jobs) {
        Count si = streamin_cycles(j.inputs, ports.n_load, cluster.bank_width);
        Count so = streamout_cycles(j.output, ports.n_store, cluster.bank_width);
        if (cluster.contention > 1.0) {
            si = static_cast<Count>(std::ceil(static_cast<double>(si) * cluster.contention));
            so = static_cast<Count>(std::ceil(static_cast<double>(so) * cluster.contention));
        }
        t.phases.streamin += si;
        t.phases.compute += ima.overlap_streamin_compute ? std::max<Count>(0, compute - si) : compute;
        t.phases.streamout += so;
    }
    return t;
}

[[nodiscard]] inline LayerTiming layer_cycles_sw(const ShapedLayer& l, const ClusterConfig& cluster) {
    cluster.validate();
    LayerTiming t;
    t.name = l.name;
    t.target = Target::Cores;
    t.depthwise = is_depthwise(l.layer);
    t.macs = l.macs();
    const double eta = t.depthwise ? cluster.eta_dw : cluster.eta_conv;
    const double per_cycle = static_cast<double>(cluster.n_cores * cluster.simd_macs_per_core_cycle) * eta;
    t.phases.sw = static_cast<Count>(std::ceil(static_cast<double>(t.macs) / per_cycle - 1e-9));
    if (t.depthwise) {
        // HWC -> CHW before the kernel and back afterwards.
        const Count bytes = l.input.elements() + l.output().elements();
        t.phases.marshal = ceil_div(bytes, cluster.marshal_bytes_per_cycle);
    }
    return t;
}

[[nodiscard]] inline LayerTiming residual_add_cycles(const std::string& name, const TensorShape& shape,
                                                     const ClusterConfig& cluster) {
    LayerTiming t;
    t.name = name;
    t.target = Target::Residual;
    t.phases.sw = ceil_div(shape.elements(), cluster.n_cores * cluster.bank_width);
    return t;
}

// ---------------------------------------------------------------------------
// Plans and schedules
// ---------------------------------------------------------------------------

/// Named execution plans: everything on the cores; everything on the IMA
/// with depthwise groups of c_job channels; or 1x1/standard on the IMA and
/// depthwise on the cores.
struct PlanSpec {
    enum class Kind { Software, Ima, Hybrid };
    Kind kind = Kind::Hybrid;
    Count c_job = 0;

    [[nodiscard]] std::string name() const {
        switch (kind) {
        case Kind::Software: return "sw";
        case Kind::Ima: return "ima" + std::to_string(c_job);
        case Kind::Hybrid: return "hybrid";
        }
        return "?";
    }

    [[nodiscard]] bool uses_ima() const noexcept { return kind != Kind::Software; }

    static PlanSpec software() { return {Kind::Software, 0}; }
    static PlanSpec ima(Count c_job) { return {Kind::Ima, c_job}; }
    static PlanSpec hybrid() { return {Kind::Hybrid, 0}; }

    /// Accepts "sw", "hybrid" and "ima<N>" (case-insensitive).
    [[nodiscard]] static PlanSpec parse(std::string_view text) {
        std::string s(text);
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (s == "sw" || s == "software") return software();
        if (s == "hybrid") return hybrid();
        if (s.size() > 3 && s.rfind("ima", 0) == 0) {
            Count n = 0;
            auto [p, ec] = std::from_chars(s.data() + 3, s.data() + s.size(), n);
            if (ec == std::errc{} && p == s.data() + s.size() && n >= 1) return ima(n);
        }
        throw Error(ErrorCode::Validation, "unknown plan '" + std::string(text) + "' (expected sw, hybrid, ima<N>)");
    }

    friend bool operator==(const PlanSpec&, const PlanSpec&) = default;
};

using ExecutionPlan = std::vector<Assignment>;

[[nodiscard]] inline ExecutionPlan make_plan(const PlanSpec& spec, const NetworkDescriptor& net) {
    ExecutionPlan plan;
    plan.reserve(net.layers.size());
    for (const auto& l : net.layers) {
        const bool dw = is_depthwise(l.layer);
        if (spec.kind == PlanSpec::Kind::Software || (spec.kind == PlanSpec::Kind::Hybrid && dw))
            plan.push_back(OnCores{});
        else
            plan.push_back(OnIma{mapper::natural_strategy(l.layer, dw ? spec.c_job : 1)});
    }
    return plan;
}

struct ScheduleResult {
    std::string plan;
    PortConfig ports;
    double f_hz = 0.0;
    bool uses_ima = false;
    Count macs = 0;
    std::vector<LayerTiming> layers;
    std::vector<mapper::CrossbarAllocation> allocations;
    PhaseBreakdown totals;

    [[nodiscard]] Count total_cycles() const noexcept { return totals.total(); }
    [[nodiscard]] double wall_time_s() const noexcept {
        return f_hz > 0.0 ? static_cast<double>(total_cycles()) / f_hz : 0.0;
    }
    [[nodiscard]] Count depthwise_cycles() const noexcept {
        Count c = 0;
        for (const auto& l : layers)
            if (l.depthwise) c += l.phases.total();
        return c;
    }
};

/// Layers run strictly in order; nothing overlaps across layer boundaries.
[[nodiscard]] inline ScheduleResult schedule(const NetworkDescriptor& net, const ExecutionPlan& plan,
                                             const std::string& plan_name, const PortConfig& ports,
                                             const ClusterConfig& cluster, const ImaTiming& ima) {
    net.validate_chain();
    cluster.validate();
    ports.validate();
    require(plan.size() == net.layers.size(), ErrorCode::Validation,
            "execution plan must assign every layer exactly once");
    ScheduleResult r;
    r.plan = plan_name;
    r.ports = ports;
    r.f_hz = cluster.f_hz;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const ShapedLayer& l = net.layers[i];
        if (const auto* on = std::get_if<OnIma>(&plan[i])) {
            r.layers.push_back(layer_cycles_ima(l, on->strategy, ports, ima, cluster));
            auto alloc = mapper::map_layer(l.layer, on->strategy);
            alloc.layer = l.name;
            r.allocations.push_back(std::move(alloc));
            r.uses_ima = true;
        } else {
            r.layers.push_back(layer_cycles_sw(l, cluster));
        }
        r.macs += r.layers.back().macs;
        if (l.residual_after)
            r.layers.push_back(residual_add_cycles(l.name + ".residual", l.output(), cluster));
    }
    for (const auto& lt : r.layers) r.totals += lt.phases;
    return r;
}

[[nodiscard]] inline ScheduleResult schedule(const NetworkDescriptor& net, const PlanSpec& spec,
                                             const PortConfig& ports, const ClusterConfig& cluster,
                                             const ImaTiming& ima) {
    return schedule(net, make_plan(spec, net), spec.name(), ports, cluster, ima);
}

[[nodiscard]] inline ScheduleResult bottleneck_schedule(const BottleneckDescriptor& b, const PlanSpec& spec,
                                                        const PortConfig& ports, const ClusterConfig& cluster,
                                                        const ImaTiming& ima) {
    return schedule(b.to_network(), spec, ports, cluster, ima);
}

} // namespace imasim::timing
