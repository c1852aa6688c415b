#pragma once

// Scenario files for the command-line tool. Schema in docs/schemas.md.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "imasim/calibration.hpp"
#include "imasim/dse.hpp"
#include "imasim/error.hpp"
#include "imasim/timing.hpp"
#include "imasim/workload_io.hpp"

namespace imasim {

inline constexpr int kScenarioSchemaVersion = 1;

struct ScenarioConfig {
    std::string workload_label = "bottleneck";
    NetworkDescriptor workload = io::preset("bottleneck");
    timing::PlanSpec plan = timing::PlanSpec::hybrid();
    timing::PortConfig ports{4, 4};
    std::vector<timing::PlanSpec> sweep_plans = dse::default_plans();
    std::vector<timing::PortConfig> sweep_ports = dse::default_ports();
    std::optional<std::string> calibration_path;
    std::vector<std::string> overrides;
    std::uint64_t seed = 1;
    Count cases = 1000;
    std::optional<std::string> format;
    std::optional<std::string> out;

    /// Calibration file (or defaults) with overrides applied in order.
    [[nodiscard]] Calibration calibration() const {
        Calibration cal = calibration_path ? load_calibration(*calibration_path) : Calibration{};
        for (const auto& o : overrides) apply_override(cal, o);
        return cal;
    }
};

namespace detail {

inline std::string get_string(const nlohmann::json& j, const char* key) {
    require(j[key].is_string(), ErrorCode::Validation, std::string("scenario.") + key + " must be a string");
    return j[key].get<std::string>();
}

} // namespace detail

/// Validates the whole document before returning; nothing is simulated here.
[[nodiscard]] inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    io::detail::check_keys(j, {"schema_version", "comment", "workload", "plan", "ports", "sweep", "calibration",
                               "overrides", "seed", "cases", "format", "out"},
                           "scenario");
    require(j.contains("schema_version") && j["schema_version"].is_number_integer() &&
                j["schema_version"].get<int>() == kScenarioSchemaVersion,
            ErrorCode::Validation, "scenario schema_version must be " + std::to_string(kScenarioSchemaVersion));
    ScenarioConfig s;
    if (j.contains("workload")) {
        const auto& w = j["workload"];
        if (w.is_string()) {
            s.workload_label = w.get<std::string>();
            s.workload = io::preset(s.workload_label);
        } else {
            s.workload = io::workload_from_json(w);
            s.workload_label = s.workload.name;
        }
    }
    if (j.contains("plan")) s.plan = timing::PlanSpec::parse(detail::get_string(j, "plan"));
    if (j.contains("ports")) s.ports = timing::PortConfig::parse(detail::get_string(j, "ports"));
    if (j.contains("sweep")) {
        const auto& sw = j["sweep"];
        io::detail::check_keys(sw, {"plans", "ports"}, "scenario.sweep");
        if (sw.contains("plans")) {
            require(sw["plans"].is_array() && !sw["plans"].empty(), ErrorCode::Validation,
                    "scenario.sweep.plans must be a non-empty array");
            s.sweep_plans.clear();
            for (const auto& p : sw["plans"]) {
                require(p.is_string(), ErrorCode::Validation, "plan names must be strings");
                s.sweep_plans.push_back(timing::PlanSpec::parse(p.get<std::string>()));
            }
        }
        if (sw.contains("ports")) {
            require(sw["ports"].is_array() && !sw["ports"].empty(), ErrorCode::Validation,
                    "scenario.sweep.ports must be a non-empty array");
            s.sweep_ports.clear();
            for (const auto& p : sw["ports"]) {
                require(p.is_string(), ErrorCode::Validation, "port configs must be strings like \"4/4\"");
                s.sweep_ports.push_back(timing::PortConfig::parse(p.get<std::string>()));
            }
        }
    }
    if (j.contains("calibration")) s.calibration_path = detail::get_string(j, "calibration");
    if (j.contains("overrides")) {
        require(j["overrides"].is_array(), ErrorCode::Validation, "scenario.overrides must be an array");
        for (const auto& o : j["overrides"]) {
            require(o.is_string(), ErrorCode::Validation, "overrides must be strings");
            s.overrides.push_back(o.get<std::string>());
        }
        Calibration probe;
        for (const auto& o : s.overrides) apply_override(probe, o);
    }
    if (j.contains("seed")) {
        require(j["seed"].is_number_unsigned(), ErrorCode::Validation, "scenario.seed must be a non-negative integer");
        s.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("cases")) {
        require(j["cases"].is_number_unsigned(), ErrorCode::Validation, "scenario.cases must be a non-negative integer");
        s.cases = j["cases"].get<Count>();
    }
    if (j.contains("format")) {
        s.format = detail::get_string(j, "format");
        (void)dse::parse_format(*s.format);
    }
    if (j.contains("out")) s.out = detail::get_string(j, "out");
    return s;
}

[[nodiscard]] inline ScenarioConfig load_scenario(const std::string& path) {
    return scenario_from_json(io::read_json_file(path));
}

} // namespace imasim
