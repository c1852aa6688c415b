#pragma once

// Every tunable constant of the cost model, with JSON persistence and
// "section.key=value" overrides. One field table drives all three.

#include <charconv>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "imasim/error.hpp"
#include "imasim/metrics.hpp"
#include "imasim/timing.hpp"

namespace imasim {

inline constexpr int kCalibrationSchemaVersion = 1;

struct Calibration {
    timing::ClusterConfig cluster;
    timing::ImaTiming ima;
    metrics::AreaModel area;
    metrics::EnergyModel energy;

    void validate() const {
        cluster.validate();
        ima.validate();
        area.validate();
        energy.validate();
    }
};

struct CalibrationField {
    std::string_view section;
    std::string_view key;
    std::string_view help;
    std::function<std::variant<double*, Count*, bool*>(Calibration&)> ref;

    [[nodiscard]] std::string path() const { return std::string(section) + "." + std::string(key); }
};

inline const std::vector<CalibrationField>& calibration_fields() {
    using R = std::variant<double*, Count*, bool*>;
    static const std::vector<CalibrationField> fields{
        {"cluster", "n_cores", "cores in the cluster", [](Calibration& c) -> R { return &c.cluster.n_cores; }},
        {"cluster", "f_hz", "cluster clock [Hz]", [](Calibration& c) -> R { return &c.cluster.f_hz; }},
        {"cluster", "n_banks", "TCDM banks", [](Calibration& c) -> R { return &c.cluster.n_banks; }},
        {"cluster", "bank_width", "bytes per bank word / port beat", [](Calibration& c) -> R { return &c.cluster.bank_width; }},
        {"cluster", "simd_macs_per_core_cycle", "8-bit MACs per core per cycle",
         [](Calibration& c) -> R { return &c.cluster.simd_macs_per_core_cycle; }},
        {"cluster", "eta_conv", "SW utilization, standard/pointwise", [](Calibration& c) -> R { return &c.cluster.eta_conv; }},
        {"cluster", "eta_dw", "SW utilization, depthwise (fitted)", [](Calibration& c) -> R { return &c.cluster.eta_dw; }},
        {"cluster", "marshal_bytes_per_cycle", "HWC<->CHW conversion throughput",
         [](Calibration& c) -> R { return &c.cluster.marshal_bytes_per_cycle; }},
        {"cluster", "contention", "TCDM contention factor on IMA streams (>= 1)",
         [](Calibration& c) -> R { return &c.cluster.contention; }},
        {"ima", "t_array_ns", "analog array operation latency [ns]", [](Calibration& c) -> R { return &c.ima.t_array_ns; }},
        {"ima", "cfg_overhead_cycles", "register programming per layer",
         [](Calibration& c) -> R { return &c.ima.cfg_overhead_cycles; }},
        {"ima", "job_handshake_cycles", "trigger/handshake per job", [](Calibration& c) -> R { return &c.ima.job_handshake_cycles; }},
        {"ima", "overlap_streamin_compute", "hide streamin behind compute",
         [](Calibration& c) -> R { return &c.ima.overlap_streamin_compute; }},
        {"area", "pcm_device_um2", "area per PCM device [um^2]", [](Calibration& c) -> R { return &c.area.pcm_device_um2; }},
        {"area", "devices_per_weight", "devices per signed weight", [](Calibration& c) -> R { return &c.area.devices_per_weight; }},
        {"area", "cluster_mm2", "cluster area [mm^2] (fitted)", [](Calibration& c) -> R { return &c.area.cluster_mm2; }},
        {"area", "ima_periphery_mm2", "IMA periphery area [mm^2] (fitted)",
         [](Calibration& c) -> R { return &c.area.ima_periphery_mm2; }},
        {"energy", "e_stream_in_pj_per_byte", "streamin energy [pJ/B]",
         [](Calibration& c) -> R { return &c.energy.e_stream_in_pj_per_byte; }},
        {"energy", "e_stream_out_pj_per_byte", "streamout energy [pJ/B]",
         [](Calibration& c) -> R { return &c.energy.e_stream_out_pj_per_byte; }},
        {"energy", "e_job_pj", "DAC + array + ADC energy per job [pJ]", [](Calibration& c) -> R { return &c.energy.e_job_pj; }},
        {"energy", "p_core_active_mw", "cores busy [mW]", [](Calibration& c) -> R { return &c.energy.p_core_active_mw; }},
        {"energy", "p_core_idle_mw", "cores idle [mW]", [](Calibration& c) -> R { return &c.energy.p_core_idle_mw; }},
        {"energy", "p_cluster_static_mw", "cluster static [mW]", [](Calibration& c) -> R { return &c.energy.p_cluster_static_mw; }},
        {"energy", "p_port_static_mw", "per IMA TCDM port [mW]", [](Calibration& c) -> R { return &c.energy.p_port_static_mw; }},
    };
    return fields;
}

namespace detail {

inline void assign_from_json(std::variant<double*, Count*, bool*> ref, const nlohmann::json& v,
                             const std::string& path) {
    std::visit([&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, bool>) {
            require(v.is_boolean(), ErrorCode::Validation, path + " must be a boolean");
            *p = v.get<bool>();
        } else if constexpr (std::is_same_v<T, Count>) {
            require(v.is_number_integer(), ErrorCode::Validation, path + " must be an integer");
            *p = v.get<Count>();
        } else {
            require(v.is_number(), ErrorCode::Validation, path + " must be a number");
            *p = v.get<double>();
        }
    }, ref);
}

} // namespace detail

[[nodiscard]] inline nlohmann::ordered_json to_json(const Calibration& cal) {
    Calibration copy = cal;
    nlohmann::ordered_json j;
    j["schema_version"] = kCalibrationSchemaVersion;
    for (const auto& f : calibration_fields()) {
        std::visit([&](auto* p) { j[std::string(f.section)][std::string(f.key)] = *p; }, f.ref(copy));
    }
    return j;
}

/// Strict reader: unknown sections or keys are rejected, missing keys keep
/// their defaults.
[[nodiscard]] inline Calibration calibration_from_json(const nlohmann::json& j) {
    require(j.is_object(), ErrorCode::Validation, "calibration must be a JSON object");
    require(j.contains("schema_version") && j["schema_version"].is_number_integer() &&
                j["schema_version"].get<int>() == kCalibrationSchemaVersion,
            ErrorCode::Validation, "calibration schema_version must be " + std::to_string(kCalibrationSchemaVersion));
    Calibration cal;
    for (const auto& [section, body] : j.items()) {
        if (section == "schema_version" || section == "comment") continue;
        bool known = false;
        for (const auto& f : calibration_fields()) known = known || f.section == section;
        require(known, ErrorCode::Validation, "unknown calibration section '" + section + "'");
        require(body.is_object(), ErrorCode::Validation, "calibration section '" + section + "' must be an object");
        for (const auto& [key, value] : body.items()) {
            bool found = false;
            for (const auto& f : calibration_fields()) {
                if (f.section == section && f.key == key) {
                    detail::assign_from_json(f.ref(cal), value, f.path());
                    found = true;
                    break;
                }
            }
            require(found, ErrorCode::Validation, "unknown calibration key '" + section + "." + key + "'");
        }
    }
    cal.validate();
    return cal;
}

[[nodiscard]] inline Calibration load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open calibration file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Validation, "calibration '" + path + "': " + e.what());
    }
    return calibration_from_json(j);
}

/// Applies "section.key=value".
inline void apply_override(Calibration& cal, std::string_view assignment) {
    const auto eq = assignment.find('=');
    require(eq != std::string_view::npos, ErrorCode::Validation,
            "override '" + std::string(assignment) + "' must look like section.key=value");
    const std::string path(assignment.substr(0, eq));
    const std::string value(assignment.substr(eq + 1));
    for (const auto& f : calibration_fields()) {
        if (f.path() != path) continue;
        std::visit([&](auto* p) {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, bool>) {
                require(value == "true" || value == "false", ErrorCode::Validation, path + " expects true/false");
                *p = value == "true";
            } else {
                T v{};
                auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
                require(ec == std::errc{} && end == value.data() + value.size(), ErrorCode::Validation,
                        "bad value '" + value + "' for " + path);
                *p = v;
            }
        }, f.ref(cal));
        cal.validate();
        return;
    }
    throw Error(ErrorCode::Validation, "unknown calibration key '" + path + "'");
}

} // namespace imasim
