#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "imasim/error.hpp"

namespace imasim {

using Count = std::int64_t;

// Activations are 8-bit unsigned, weights 4-bit signed, for every layer kind.
inline constexpr int kActivationBits = 8;
inline constexpr int kWeightBits = 4;

enum class Layout { HWC, CHW };

struct TensorShape {
    Count height = 1;
    Count width = 1;
    Count channels = 1;
    Layout layout = Layout::HWC;

    [[nodiscard]] Count elements() const noexcept { return height * width * channels; }
    [[nodiscard]] Count pixels() const noexcept { return height * width; }

    void validate() const {
        require(height >= 1 && width >= 1 && channels >= 1, ErrorCode::InvalidArgument,
                "tensor dimensions must be >= 1");
    }

    friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

struct StandardConv {
    Count k = 3;
    Count stride = 1;
    Count pad = 0;
    Count c_in = 1;
    Count c_out = 1;
    friend bool operator==(const StandardConv&, const StandardConv&) = default;
};

struct DepthwiseConv {
    Count k = 3;
    Count stride = 1;
    Count pad = 0;
    Count c = 1;
    friend bool operator==(const DepthwiseConv&, const DepthwiseConv&) = default;
};

/// 1x1, stride 1, no padding. Behaves exactly like StandardConv with k = 1.
struct PointwiseConv {
    Count c_in = 1;
    Count c_out = 1;
    friend bool operator==(const PointwiseConv&, const PointwiseConv&) = default;
};

using LayerDescriptor = std::variant<StandardConv, DepthwiseConv, PointwiseConv>;

[[nodiscard]] inline StandardConv as_standard(const PointwiseConv& pw) noexcept {
    return StandardConv{1, 1, 0, pw.c_in, pw.c_out};
}

[[nodiscard]] inline bool is_depthwise(const LayerDescriptor& l) noexcept {
    return std::holds_alternative<DepthwiseConv>(l);
}

[[nodiscard]] inline Count kernel_size(const LayerDescriptor& l) noexcept {
    return std::visit([](const auto& v) -> Count {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, PointwiseConv>) return 1;
        else return v.k;
    }, l);
}

[[nodiscard]] inline Count stride_of(const LayerDescriptor& l) noexcept {
    return std::visit([](const auto& v) -> Count {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, PointwiseConv>) return 1;
        else return v.stride;
    }, l);
}

[[nodiscard]] inline Count pad_of(const LayerDescriptor& l) noexcept {
    return std::visit([](const auto& v) -> Count {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, PointwiseConv>) return 0;
        else return v.pad;
    }, l);
}

[[nodiscard]] inline Count input_channels(const LayerDescriptor& l) noexcept {
    return std::visit([](const auto& v) -> Count {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, DepthwiseConv>) return v.c;
        else return v.c_in;
    }, l);
}

[[nodiscard]] inline Count output_channels(const LayerDescriptor& l) noexcept {
    return std::visit([](const auto& v) -> Count {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, DepthwiseConv>) return v.c;
        else return v.c_out;
    }, l);
}

[[nodiscard]] inline std::string kind_name(const LayerDescriptor& l) {
    switch (l.index()) {
    case 0: return "standard";
    case 1: return "depthwise";
    default: return "pointwise";
    }
}

inline void validate(const LayerDescriptor& l) {
    require(kernel_size(l) >= 1, ErrorCode::InvalidArgument, "kernel size must be >= 1");
    require(stride_of(l) >= 1, ErrorCode::InvalidArgument, "stride must be >= 1");
    require(pad_of(l) >= 0, ErrorCode::InvalidArgument, "padding must be >= 0");
    require(input_channels(l) >= 1 && output_channels(l) >= 1, ErrorCode::InvalidArgument,
            "channel counts must be >= 1");
}

[[nodiscard]] inline TensorShape output_shape(const LayerDescriptor& layer, const TensorShape& in) {
    validate(layer);
    in.validate();
    if (in.channels != input_channels(layer)) {
        throw Error(ErrorCode::ChannelMismatch,
                    "layer expects " + std::to_string(input_channels(layer)) +
                        " input channels, got " + std::to_string(in.channels));
    }
    const Count k = kernel_size(layer);
    const Count s = stride_of(layer);
    const Count p = pad_of(layer);
    require(in.height + 2 * p >= k && in.width + 2 * p >= k, ErrorCode::InvalidArgument,
            "kernel larger than padded input");
    return TensorShape{(in.height + 2 * p - k) / s + 1, (in.width + 2 * p - k) / s + 1,
                       output_channels(layer), in.layout};
}

[[nodiscard]] inline Count params(const LayerDescriptor& layer) noexcept {
    const Count k = kernel_size(layer);
    if (is_depthwise(layer)) return k * k * input_channels(layer);
    return k * k * input_channels(layer) * output_channels(layer);
}

[[nodiscard]] inline Count macs(const LayerDescriptor& layer, const TensorShape& in) {
    const TensorShape out = output_shape(layer, in);
    const Count k = kernel_size(layer);
    if (is_depthwise(layer)) return out.pixels() * out.channels * k * k;
    return out.pixels() * out.channels * input_channels(layer) * k * k;
}

enum class LayerRole { Stem, Bottleneck, Head, Single };

[[nodiscard]] inline std::string to_string(LayerRole r) {
    switch (r) {
    case LayerRole::Stem: return "stem";
    case LayerRole::Bottleneck: return "bottleneck";
    case LayerRole::Head: return "head";
    case LayerRole::Single: return "single";
    }
    return "single";
}

/// A layer placed in a workload: knows its input shape and whether a
/// residual add follows it.
struct ShapedLayer {
    std::string name;
    LayerDescriptor layer;
    TensorShape input;
    LayerRole role = LayerRole::Single;
    bool residual_after = false;

    [[nodiscard]] TensorShape output() const { return output_shape(layer, input); }
    [[nodiscard]] Count macs() const { return imasim::macs(layer, input); }
    [[nodiscard]] Count params() const { return imasim::params(layer); }

    friend bool operator==(const ShapedLayer&, const ShapedLayer&) = default;
};

/// Ordered layer list. Consecutive layers must chain: output of i is the
/// input of i + 1.
struct NetworkDescriptor {
    std::string name;
    std::vector<ShapedLayer> layers;

    void validate_chain() const {
        require(!layers.empty(), ErrorCode::Validation, "network '" + name + "' has no layers");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const TensorShape out = layers[i].output();
            if (i + 1 < layers.size() && !(out == layers[i + 1].input)) {
                throw Error(ErrorCode::ChannelMismatch,
                            "layer '" + layers[i].name + "' output does not chain into '" +
                                layers[i + 1].name + "'");
            }
        }
    }

    [[nodiscard]] Count macs() const {
        Count total = 0;
        for (const auto& l : layers) total += l.macs();
        return total;
    }

    [[nodiscard]] Count params() const {
        Count total = 0;
        for (const auto& l : layers) total += l.params();
        return total;
    }

    friend bool operator==(const NetworkDescriptor&, const NetworkDescriptor&) = default;
};

struct BottleneckDescriptor {
    Count c_in = 32;
    Count expansion = 6;
    Count c_out = 32;
    Count stride = 1;
    Count height = 32;
    Count width = 32;

    [[nodiscard]] Count expanded() const noexcept { return c_in * expansion; }
    [[nodiscard]] bool residual() const noexcept { return stride == 1 && c_in == c_out; }
    [[nodiscard]] TensorShape input_shape() const { return {height, width, c_in, Layout::HWC}; }

    void validate() const {
        require(c_in >= 1 && c_out >= 1 && expansion >= 1 && stride >= 1 && height >= 1 &&
                    width >= 1,
                ErrorCode::InvalidArgument, "bottleneck fields must be >= 1");
    }

    /// Expand, 3x3 depthwise, project.
    [[nodiscard]] std::array<LayerDescriptor, 3> expand() const {
        validate();
        return {PointwiseConv{c_in, expanded()}, DepthwiseConv{3, stride, 1, expanded()},
                PointwiseConv{expanded(), c_out}};
    }

    [[nodiscard]] std::vector<ShapedLayer> layers(const std::string& prefix = "bneck",
                                                  LayerRole role = LayerRole::Bottleneck) const {
        static constexpr std::array<const char*, 3> kSuffix{".expand", ".dw", ".project"};
        std::vector<ShapedLayer> out;
        TensorShape shape = input_shape();
        const auto parts = expand();
        for (std::size_t i = 0; i < parts.size(); ++i) {
            out.push_back({prefix + kSuffix[i], parts[i], shape, role, false});
            shape = out.back().output();
        }
        out.back().residual_after = residual();
        return out;
    }

    [[nodiscard]] NetworkDescriptor to_network(const std::string& name = "bottleneck") const {
        return NetworkDescriptor{name, layers()};
    }

    [[nodiscard]] Count macs() const {
        Count total = 0;
        for (const auto& l : layers()) total += l.macs();
        return total;
    }

    [[nodiscard]] Count params() const {
        Count total = 0;
        for (const auto& l : expand()) total += imasim::params(l);
        return total;
    }

    friend bool operator==(const BottleneckDescriptor&, const BottleneckDescriptor&) = default;
};

/// Case-study block: 32 -> 192 -> 32 channels on a 32x32 map. All four
/// activation buffers fit in a 512 kB scratchpad without tiling.
[[nodiscard]] inline BottleneckDescriptor default_bottleneck() { return {32, 6, 32, 1, 32, 32}; }

/// 3x3, 32 -> 64 channels, 16x16 output ("same" padding).
[[nodiscard]] inline ShapedLayer baseline_conv() {
    return {"baseline.conv3x3", StandardConv{3, 1, 1, 32, 64}, TensorShape{16, 16, 32},
            LayerRole::Single, false};
}

/// Rounds a scaled channel count to a multiple of `divisor`, never dropping
/// more than 10% below the scaled value.
[[nodiscard]] inline Count make_divisible(double value, Count divisor = 8) {
    Count v = std::max<Count>(divisor, static_cast<Count>(value + divisor / 2.0) / divisor * divisor);
    if (static_cast<double>(v) < 0.9 * value) v += divisor;
    return v;
}

/// MobileNetV2: 3x3/s2 stem, 17 inverted-residual bottlenecks, 1x1 head.
/// The classifier is not a convolution and is omitted.
[[nodiscard]] inline NetworkDescriptor mobilenet_v2_preset(double width_multiplier = 1.0,
                                                          Count resolution = 224) {
    require(width_multiplier > 0.0, ErrorCode::InvalidArgument, "width multiplier must be > 0");
    require(resolution >= 32, ErrorCode::InvalidArgument, "resolution must be >= 32");

    struct Stage { Count t, c, n, s; };
    static constexpr std::array<Stage, 7> kStages{{
        {1, 16, 1, 1}, {6, 24, 2, 2}, {6, 32, 3, 2}, {6, 64, 4, 2},
        {6, 96, 3, 1}, {6, 160, 3, 2}, {6, 320, 1, 1},
    }};

    const auto scaled = [&](Count c) {
        return width_multiplier == 1.0 ? c : make_divisible(static_cast<double>(c) * width_multiplier);
    };

    NetworkDescriptor net;
    net.name = "mobilenet_v2";
    TensorShape shape{resolution, resolution, 3};
    const Count stem_c = scaled(32);
    net.layers.push_back({"stem.conv3x3", StandardConv{3, 2, 1, 3, stem_c}, shape, LayerRole::Stem, false});
    shape = net.layers.back().output();

    int block = 0;
    for (const Stage& st : kStages) {
        const Count c_out = scaled(st.c);
        for (Count i = 0; i < st.n; ++i) {
            BottleneckDescriptor b{shape.channels, st.t, c_out, i == 0 ? st.s : 1, shape.height,
                                   shape.width};
            for (auto& l : b.layers("block" + std::to_string(block))) net.layers.push_back(std::move(l));
            shape = net.layers.back().output();
            ++block;
        }
    }

    const Count head_c = width_multiplier > 1.0 ? make_divisible(1280.0 * width_multiplier) : 1280;
    net.layers.push_back({"head.conv1x1", PointwiseConv{shape.channels, head_c}, shape, LayerRole::Head, false});
    return net;
}

[[nodiscard]] inline int bottleneck_count(const NetworkDescriptor& net) {
    int n = 0;
    for (const auto& l : net.layers)
        if (l.role == LayerRole::Bottleneck && is_depthwise(l.layer)) ++n;
    return n;
}

} // namespace imasim
