#pragma once

// JSON form of layer, bottleneck and network descriptors. See
// docs/schemas.md for the documented layout.

#include <fstream>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "imasim/error.hpp"
#include "imasim/workload.hpp"

namespace imasim::io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace detail {

inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& what) {
    require(j.is_object(), ErrorCode::Validation, what + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        require(ok, ErrorCode::Validation, "unknown key '" + key + "' in " + what);
    }
}

inline Count get_count(const json& j, const char* key, const std::string& what) {
    require(j.contains(key), ErrorCode::Validation, what + " is missing '" + key + "'");
    require(j[key].is_number_integer(), ErrorCode::Validation, what + "." + key + " must be an integer");
    return j[key].get<Count>();
}

inline Count get_count_or(const json& j, const char* key, Count fallback, const std::string& what) {
    return j.contains(key) ? get_count(j, key, what) : fallback;
}

} // namespace detail

[[nodiscard]] inline ordered_json to_json(const LayerDescriptor& l) {
    ordered_json j;
    j["type"] = kind_name(l);
    std::visit([&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StandardConv>) {
            j["k"] = v.k; j["stride"] = v.stride; j["pad"] = v.pad; j["c_in"] = v.c_in; j["c_out"] = v.c_out;
        } else if constexpr (std::is_same_v<T, DepthwiseConv>) {
            j["k"] = v.k; j["stride"] = v.stride; j["pad"] = v.pad; j["c"] = v.c;
        } else {
            j["c_in"] = v.c_in; j["c_out"] = v.c_out;
        }
    }, l);
    return j;
}

[[nodiscard]] inline LayerDescriptor layer_from_json(const json& j) {
    require(j.is_object() && j.contains("type") && j["type"].is_string(), ErrorCode::Validation,
            "layer needs a string 'type'");
    const std::string type = j["type"].get<std::string>();
    LayerDescriptor out;
    if (type == "standard") {
        detail::check_keys(j, {"type", "k", "stride", "pad", "c_in", "c_out"}, "standard layer");
        out = StandardConv{detail::get_count(j, "k", type), detail::get_count_or(j, "stride", 1, type),
                           detail::get_count_or(j, "pad", 0, type), detail::get_count(j, "c_in", type),
                           detail::get_count(j, "c_out", type)};
    } else if (type == "depthwise") {
        detail::check_keys(j, {"type", "k", "stride", "pad", "c"}, "depthwise layer");
        out = DepthwiseConv{detail::get_count(j, "k", type), detail::get_count_or(j, "stride", 1, type),
                            detail::get_count_or(j, "pad", 0, type), detail::get_count(j, "c", type)};
    } else if (type == "pointwise") {
        detail::check_keys(j, {"type", "c_in", "c_out"}, "pointwise layer");
        out = PointwiseConv{detail::get_count(j, "c_in", type), detail::get_count(j, "c_out", type)};
    } else {
        throw Error(ErrorCode::Validation, "unknown layer type '" + type + "'");
    }
    try {
        validate(out);
    } catch (const Error& e) {
        throw Error(ErrorCode::Validation, e.what());
    }
    return out;
}

[[nodiscard]] inline LayerRole role_from_string(const std::string& s) {
    if (s == "stem") return LayerRole::Stem;
    if (s == "bottleneck") return LayerRole::Bottleneck;
    if (s == "head") return LayerRole::Head;
    if (s == "single") return LayerRole::Single;
    throw Error(ErrorCode::Validation, "unknown layer role '" + s + "'");
}

[[nodiscard]] inline ordered_json to_json(const ShapedLayer& l) {
    ordered_json j;
    j["name"] = l.name;
    j["layer"] = to_json(l.layer);
    j["input"] = {{"height", l.input.height}, {"width", l.input.width}, {"channels", l.input.channels}};
    j["role"] = to_string(l.role);
    j["residual_after"] = l.residual_after;
    return j;
}

[[nodiscard]] inline ShapedLayer shaped_layer_from_json(const json& j) {
    detail::check_keys(j, {"name", "layer", "input", "role", "residual_after"}, "network layer");
    ShapedLayer l;
    l.name = j.value("name", std::string("layer"));
    require(j.contains("layer"), ErrorCode::Validation, "network layer is missing 'layer'");
    l.layer = layer_from_json(j["layer"]);
    require(j.contains("input"), ErrorCode::Validation, "network layer is missing 'input'");
    const json& in = j["input"];
    detail::check_keys(in, {"height", "width", "channels"}, "layer input");
    l.input = TensorShape{detail::get_count(in, "height", "input"), detail::get_count(in, "width", "input"),
                          detail::get_count_or(in, "channels", input_channels(l.layer), "input"), Layout::HWC};
    if (j.contains("role")) {
        require(j["role"].is_string(), ErrorCode::Validation, "role must be a string");
        l.role = role_from_string(j["role"].get<std::string>());
    }
    if (j.contains("residual_after")) {
        require(j["residual_after"].is_boolean(), ErrorCode::Validation, "residual_after must be a boolean");
        l.residual_after = j["residual_after"].get<bool>();
    }
    return l;
}

[[nodiscard]] inline ordered_json to_json(const BottleneckDescriptor& b) {
    ordered_json j;
    j["kind"] = "bottleneck";
    j["c_in"] = b.c_in;
    j["expansion"] = b.expansion;
    j["c_out"] = b.c_out;
    j["stride"] = b.stride;
    j["height"] = b.height;
    j["width"] = b.width;
    return j;
}

[[nodiscard]] inline BottleneckDescriptor bottleneck_from_json(const json& j) {
    detail::check_keys(j, {"kind", "c_in", "expansion", "c_out", "stride", "height", "width"}, "bottleneck");
    BottleneckDescriptor b{detail::get_count(j, "c_in", "bottleneck"), detail::get_count(j, "expansion", "bottleneck"),
                           detail::get_count(j, "c_out", "bottleneck"), detail::get_count_or(j, "stride", 1, "bottleneck"),
                           detail::get_count(j, "height", "bottleneck"), detail::get_count(j, "width", "bottleneck")};
    try {
        b.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::Validation, e.what());
    }
    return b;
}

[[nodiscard]] inline ordered_json to_json(const NetworkDescriptor& n) {
    ordered_json j;
    j["kind"] = "network";
    j["name"] = n.name;
    j["layers"] = ordered_json::array();
    for (const auto& l : n.layers) j["layers"].push_back(to_json(l));
    return j;
}

[[nodiscard]] inline NetworkDescriptor network_from_json(const json& j) {
    detail::check_keys(j, {"kind", "name", "layers"}, "network");
    require(j.contains("layers") && j["layers"].is_array(), ErrorCode::Validation, "network needs a 'layers' array");
    NetworkDescriptor n;
    n.name = j.value("name", std::string("network"));
    for (const auto& l : j["layers"]) n.layers.push_back(shaped_layer_from_json(l));
    try {
        n.validate_chain();
    } catch (const Error& e) {
        throw Error(ErrorCode::Validation, e.what());
    }
    return n;
}

/// Any workload document: {"kind": "bottleneck" | "network" | "layer", ...}.
/// A "layer" document is a single ShapedLayer object plus the kind tag.
[[nodiscard]] inline NetworkDescriptor workload_from_json(const json& j) {
    require(j.is_object() && j.contains("kind") && j["kind"].is_string(), ErrorCode::Validation,
            "workload needs a string 'kind'");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "bottleneck") return bottleneck_from_json(j).to_network();
    if (kind == "network") return network_from_json(j);
    if (kind == "layer") {
        json copy = j;
        copy.erase("kind");
        ShapedLayer l = shaped_layer_from_json(copy);
        try {
            (void)l.output();
        } catch (const Error& e) {
            throw Error(ErrorCode::Validation, e.what());
        }
        return NetworkDescriptor{l.name, {l}};
    }
    throw Error(ErrorCode::Validation, "unknown workload kind '" + kind + "'");
}

[[nodiscard]] inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Validation, "'" + path + "': " + e.what());
    }
}

/// Built-in workloads: "bottleneck", "baseline-conv", "mobilenetv2".
[[nodiscard]] inline NetworkDescriptor preset(const std::string& name) {
    if (name == "bottleneck") return default_bottleneck().to_network("bottleneck");
    if (name == "baseline-conv") {
        const ShapedLayer l = baseline_conv();
        return NetworkDescriptor{"baseline-conv", {l}};
    }
    if (name == "mobilenetv2") return mobilenet_v2_preset();
    throw Error(ErrorCode::Validation, "unknown preset '" + name + "' (bottleneck, baseline-conv, mobilenetv2)");
}

} // namespace imasim::io
