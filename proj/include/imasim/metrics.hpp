#pragma once

#include <string>
#include <vector>

#include "imasim/mapper.hpp"
#include "imasim/timing.hpp"

namespace imasim::metrics {

struct AreaModel {
    double pcm_device_um2 = 18.2;
    Count devices_per_weight = 2;
    double cluster_mm2 = 0.38;        // fitted
    double ima_periphery_mm2 = 0.12;  // fitted; DAC/ADC/streamer logic, charged when an IMA is present

    void validate() const {
        require(pcm_device_um2 >= 0 && devices_per_weight >= 1 && cluster_mm2 >= 0 && ima_periphery_mm2 >= 0,
                ErrorCode::Validation, "area model parameters must be >= 0");
    }
};

/// Dynamic energies in pJ, powers in mW. All values are fitted defaults.
struct EnergyModel {
    double e_stream_in_pj_per_byte = 0.444;
    double e_stream_out_pj_per_byte = 0.444;
    double e_job_pj = 17.8;
    double p_core_active_mw = 4.44;
    double p_core_idle_mw = 1.32;
    double p_cluster_static_mw = 1.78;
    double p_port_static_mw = 0.0354;  // per 32-bit IMA master port

    void validate() const {
        require(e_stream_in_pj_per_byte >= 0 && e_stream_out_pj_per_byte >= 0 && e_job_pj >= 0 &&
                    p_core_active_mw >= 0 && p_core_idle_mw >= 0 && p_cluster_static_mw >= 0 &&
                    p_port_static_mw >= 0,
                ErrorCode::Validation, "energy model parameters must be >= 0");
    }
};

[[nodiscard]] inline double pcm_area_mm2(const std::vector<mapper::CrossbarAllocation>& allocs, const AreaModel& m) {
    Count weights = 0;
    for (const auto& a : allocs) weights += a.weights_total;
    return static_cast<double>(weights * m.devices_per_weight) * m.pcm_device_um2 * 1e-6;
}

/// PCM area, including structural-zero padding. With `include_cluster`, adds
/// the cluster and (if any layer is on the IMA) the IMA periphery.
[[nodiscard]] inline double area_mm2(const std::vector<mapper::CrossbarAllocation>& allocs, const AreaModel& m,
                                     bool include_cluster, bool ima_present) {
    double a = pcm_area_mm2(allocs, m);
    if (include_cluster) a += m.cluster_mm2 + (ima_present ? m.ima_periphery_mm2 : 0.0);
    return a;
}

[[nodiscard]] inline double area_mm2(const std::vector<mapper::CrossbarAllocation>& allocs, const AreaModel& m,
                                     bool include_cluster) {
    return area_mm2(allocs, m, include_cluster, !allocs.empty());
}

struct EnergyBreakdown {
    double stream_j = 0.0;
    double jobs_j = 0.0;
    double cores_j = 0.0;
    double static_j = 0.0;
    double ports_j = 0.0;

    [[nodiscard]] double total() const noexcept { return stream_j + jobs_j + cores_j + static_j + ports_j; }
};

[[nodiscard]] inline EnergyBreakdown energy(const timing::ScheduleResult& s, const EnergyModel& e) {
    e.validate();
    EnergyBreakdown out;
    Count core_cycles = 0;
    for (const auto& l : s.layers) {
        if (l.target == timing::Target::Ima) {
            out.stream_j += (static_cast<double>(l.bytes_in) * e.e_stream_in_pj_per_byte +
                             static_cast<double>(l.bytes_out) * e.e_stream_out_pj_per_byte) * 1e-12;
            out.jobs_j += static_cast<double>(l.jobs) * e.e_job_pj * 1e-12;
        }
        core_cycles += l.phases.sw + l.phases.marshal;
    }
    const double t = s.wall_time_s();
    const double t_active = s.f_hz > 0.0 ? static_cast<double>(core_cycles) / s.f_hz : 0.0;
    out.cores_j = (e.p_core_active_mw * t_active + e.p_core_idle_mw * (t - t_active)) * 1e-3;
    out.static_j = e.p_cluster_static_mw * t * 1e-3;
    if (s.uses_ima)
        out.ports_j = e.p_port_static_mw * static_cast<double>(s.ports.n_load + s.ports.n_store) * t * 1e-3;
    return out;
}

struct MetricsReport {
    std::string plan;
    timing::PortConfig ports;
    Count macs = 0;
    Count total_cycles = 0;
    double wall_time_s = 0.0;
    double energy_j = 0.0;
    double pcm_area_mm2 = 0.0;
    double full_area_mm2 = 0.0;
    double gops = 0.0;
    double tops_per_w = 0.0;
    double gops_per_mm2_pcm = 0.0;   // 0 when no PCM is used
    double gops_per_mm2_full = 0.0;
};

/// 1 MAC = 2 OPs.
[[nodiscard]] inline double gops(Count macs, Count cycles, double f_hz) noexcept {
    return cycles == 0 ? 0.0 : 2.0 * static_cast<double>(macs) * f_hz / (static_cast<double>(cycles) * 1e9);
}

[[nodiscard]] inline MetricsReport report(const timing::ScheduleResult& s, const AreaModel& area,
                                          const EnergyModel& e) {
    area.validate();
    MetricsReport r;
    r.plan = s.plan;
    r.ports = s.ports;
    r.macs = s.macs;
    r.total_cycles = s.total_cycles();
    r.wall_time_s = s.wall_time_s();
    r.energy_j = energy(s, e).total();
    r.pcm_area_mm2 = area_mm2(s.allocations, area, false, s.uses_ima);
    r.full_area_mm2 = area_mm2(s.allocations, area, true, s.uses_ima);
    r.gops = gops(s.macs, r.total_cycles, s.f_hz);
    r.tops_per_w = r.energy_j > 0.0 ? 2.0 * static_cast<double>(s.macs) / r.energy_j / 1e12 : 0.0;
    r.gops_per_mm2_pcm = r.pcm_area_mm2 > 0.0 ? r.gops / r.pcm_area_mm2 : 0.0;
    r.gops_per_mm2_full = r.full_area_mm2 > 0.0 ? r.gops / r.full_area_mm2 : 0.0;
    return r;
}

} // namespace imasim::metrics
