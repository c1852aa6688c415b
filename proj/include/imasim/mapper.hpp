#pragma once

// Placement of conv layers on the crossbar and the address segments the
// streamers walk for every job (virtual im2col over an HWC buffer).

#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "imasim/error.hpp"
#include "imasim/workload.hpp"
#include "imasim/xbar.hpp"

namespace imasim::mapper {

using xbar::Region;

struct StandardIm2col {
    friend bool operator==(const StandardIm2col&, const StandardIm2col&) = default;
};
struct Pointwise {
    friend bool operator==(const Pointwise&, const Pointwise&) = default;
};
/// Depthwise layer split in groups of c_job channels, each group one
/// block-diagonal region.
struct DepthwiseBlock {
    Count c_job = 1;
    friend bool operator==(const DepthwiseBlock&, const DepthwiseBlock&) = default;
};

using MappingStrategy = std::variant<StandardIm2col, Pointwise, DepthwiseBlock>;

[[nodiscard]] inline std::string to_string(const MappingStrategy& s) {
    if (std::holds_alternative<StandardIm2col>(s)) return "im2col";
    if (std::holds_alternative<Pointwise>(s)) return "pointwise";
    return "dw-block(" + std::to_string(std::get<DepthwiseBlock>(s).c_job) + ")";
}

/// Physical array bounds. The default is an array sized to fit anything.
struct ArrayLimits {
    Count rows = std::numeric_limits<Count>::max() / 4;
    Count cols = std::numeric_limits<Count>::max() / 4;
};

/// Greedy row-major shelf packing: regions go left to right and wrap to a new
/// shelf when the column limit would be exceeded.
class ShelfPacker {
public:
    explicit ShelfPacker(ArrayLimits limits = {}) : limits_(limits) {}

    Region place(Count rows, Count cols) {
        if (rows > limits_.rows || cols > limits_.cols)
            throw Error(ErrorCode::SplitRequired, std::to_string(rows) + "x" + std::to_string(cols) +
                                                      " block does not fit a " +
                                                      std::to_string(limits_.rows) + "x" +
                                                      std::to_string(limits_.cols) + " array");
        if (x_ + cols > limits_.cols) {
            y_ += shelf_h_;
            x_ = 0;
            shelf_h_ = 0;
        }
        if (y_ + rows > limits_.rows) throw Error(ErrorCode::SplitRequired, "array is full");
        Region r{y_, x_, rows, cols};
        x_ += cols;
        shelf_h_ = std::max(shelf_h_, rows);
        rows_used_ = std::max(rows_used_, y_ + rows);
        cols_used_ = std::max(cols_used_, x_);
        return r;
    }

    [[nodiscard]] Count rows_used() const noexcept { return rows_used_; }
    [[nodiscard]] Count cols_used() const noexcept { return cols_used_; }

private:
    ArrayLimits limits_;
    Count x_ = 0, y_ = 0, shelf_h_ = 0;
    Count rows_used_ = 0, cols_used_ = 0;
};

struct CrossbarAllocation {
    std::string layer;
    MappingStrategy strategy;
    std::vector<Region> regions;
    Count rows_used = 0;
    Count cols_used = 0;
    Count weights_total = 0;   // includes structural-zero padding
    Count weights_useful = 0;
    Count jobs_per_output_pixel = 1;

    [[nodiscard]] Count devices_total() const noexcept { return weights_total * xbar::kDevicesPerWeight; }
    [[nodiscard]] Count devices_useful() const noexcept { return weights_useful * xbar::kDevicesPerWeight; }
};

[[nodiscard]] inline double utilization(const CrossbarAllocation& a) noexcept {
    return a.weights_total == 0 ? 0.0
                                : static_cast<double>(a.weights_useful) / static_cast<double>(a.weights_total);
}

/// One region of c_in*k*k rows by c_out columns; one job per output pixel.
[[nodiscard]] inline CrossbarAllocation map_standard(const StandardConv& conv, ArrayLimits limits = {}) {
    validate(LayerDescriptor{conv});
    const Count rows = conv.c_in * conv.k * conv.k;
    if (rows > limits.rows || conv.c_out > limits.cols)
        throw Error(ErrorCode::SplitRequired, "conv needs " + std::to_string(rows) + "x" +
                                                  std::to_string(conv.c_out) + " crossbar cells");
    CrossbarAllocation a;
    a.strategy = StandardIm2col{};
    a.regions.push_back(Region{0, 0, rows, conv.c_out});
    a.rows_used = rows;
    a.cols_used = conv.c_out;
    a.weights_total = a.weights_useful = rows * conv.c_out;
    a.jobs_per_output_pixel = 1;
    return a;
}

[[nodiscard]] inline CrossbarAllocation map_pointwise(const PointwiseConv& pw, ArrayLimits limits = {}) {
    CrossbarAllocation a = map_standard(as_standard(pw), limits);
    a.strategy = Pointwise{};
    return a;
}

/// ceil(c / c_job) groups, each a (k*k*c_job) x c_job block. Only the
/// diagonal taps hold weights; a partial last group is padded to c_job.
[[nodiscard]] inline CrossbarAllocation map_depthwise(const DepthwiseConv& dw, Count c_job,
                                                      ArrayLimits limits = {}) {
    validate(LayerDescriptor{dw});
    require(c_job >= 1, ErrorCode::InvalidArgument, "c_job must be >= 1");
    require(c_job <= dw.c, ErrorCode::InvalidArgument,
            "c_job " + std::to_string(c_job) + " exceeds channel count " + std::to_string(dw.c));
    const Count groups = (dw.c + c_job - 1) / c_job;
    const Count block_rows = dw.k * dw.k * c_job;

    CrossbarAllocation a;
    a.strategy = DepthwiseBlock{c_job};
    ShelfPacker packer(limits);
    for (Count g = 0; g < groups; ++g) a.regions.push_back(packer.place(block_rows, c_job));
    a.rows_used = packer.rows_used();
    a.cols_used = packer.cols_used();
    a.weights_total = groups * block_rows * c_job;
    a.weights_useful = dw.k * dw.k * dw.c;
    a.jobs_per_output_pixel = groups;
    return a;
}

[[nodiscard]] inline bool strategy_fits(const LayerDescriptor& layer, const MappingStrategy& s) noexcept {
    if (std::holds_alternative<DepthwiseBlock>(s)) return is_depthwise(layer);
    if (std::holds_alternative<Pointwise>(s)) return std::holds_alternative<PointwiseConv>(layer);
    return !is_depthwise(layer);
}

[[nodiscard]] inline CrossbarAllocation map_layer(const LayerDescriptor& layer, const MappingStrategy& s,
                                                  ArrayLimits limits = {}) {
    if (!strategy_fits(layer, s))
        throw Error(ErrorCode::StrategyMismatch, "strategy " + to_string(s) + " cannot map a " +
                                                     kind_name(layer) + " layer");
    if (const auto* dw = std::get_if<DepthwiseConv>(&layer))
        return map_depthwise(*dw, std::get<DepthwiseBlock>(s).c_job, limits);
    if (const auto* pw = std::get_if<PointwiseConv>(&layer)) {
        CrossbarAllocation a = map_pointwise(*pw, limits);
        a.strategy = s;
        return a;
    }
    return map_standard(std::get<StandardConv>(layer), limits);
}

/// Natural strategy for a layer: im2col for standard convs, the 1x1 path
/// for pointwise, and c_job groups for depthwise (c_job clamped to c).
[[nodiscard]] inline MappingStrategy natural_strategy(const LayerDescriptor& layer, Count dw_c_job) {
    if (is_depthwise(layer)) return DepthwiseBlock{std::min(dw_c_job, input_channels(layer))};
    if (std::holds_alternative<PointwiseConv>(layer)) return Pointwise{};
    return StandardIm2col{};
}

// ---------------------------------------------------------------------------
// Job streams
// ---------------------------------------------------------------------------

/// A contiguous run in the HWC activation buffer. Zero-fill runs are
/// synthesized by the streamer and never touch memory.
struct Segment {
    Count offset = 0;
    Count length = 0;
    Count stride = 1;
    bool zero_fill = false;
    friend bool operator==(const Segment&, const Segment&) = default;
};

struct Job {
    std::vector<Segment> inputs;
    Segment output;
    Count region = 0;
    Count output_columns = 0;  // bitlines sensed; may exceed output.length for a padded group
    Count out_y = 0;
    Count out_x = 0;
    Count group = 0;

    [[nodiscard]] Count input_length() const noexcept {
        Count n = 0;
        for (const auto& s : inputs) n += s.length;
        return n;
    }
};

struct JobStream {
    TensorShape input;
    TensorShape output;
    std::vector<Job> jobs;

    [[nodiscard]] Count bytes_in() const noexcept {
        Count n = 0;
        for (const auto& j : jobs)
            for (const auto& s : j.inputs)
                if (!s.zero_fill) n += s.length;
        return n;
    }
    [[nodiscard]] Count bytes_out() const noexcept {
        Count n = 0;
        for (const auto& j : jobs) n += j.output.length;
        return n;
    }
};

[[nodiscard]] inline JobStream job_stream(const LayerDescriptor& layer, const TensorShape& in,
                                          const MappingStrategy& strategy) {
    if (in.layout != Layout::HWC)
        throw Error(ErrorCode::LayoutMismatch, "IMA streamers require HWC activations");
    if (!strategy_fits(layer, strategy))
        throw Error(ErrorCode::StrategyMismatch, "strategy " + to_string(strategy) + " cannot map a " +
                                                     kind_name(layer) + " layer");
    JobStream js;
    js.input = in;
    js.output = output_shape(layer, in);
    const Count k = kernel_size(layer);
    const Count s = stride_of(layer);
    const Count p = pad_of(layer);
    const Count c_in = in.channels;
    const Count c_out = js.output.channels;

    const auto pixel_offset = [&](Count y, Count x) { return (y * in.width + x) * c_in; };
    const auto inside = [&](Count y, Count x) { return y >= 0 && y < in.height && x >= 0 && x < in.width; };

    if (!is_depthwise(layer)) {
        js.jobs.reserve(static_cast<std::size_t>(js.output.pixels()));
        for (Count oy = 0; oy < js.output.height; ++oy) {
            for (Count ox = 0; ox < js.output.width; ++ox) {
                Job j;
                j.inputs.reserve(static_cast<std::size_t>(k * k));
                for (Count ky = 0; ky < k; ++ky) {
                    for (Count kx = 0; kx < k; ++kx) {
                        const Count iy = oy * s - p + ky;
                        const Count ix = ox * s - p + kx;
                        if (inside(iy, ix)) j.inputs.push_back({pixel_offset(iy, ix), c_in, 1, false});
                        else j.inputs.push_back({0, c_in, 1, true});
                    }
                }
                j.output = {(oy * js.output.width + ox) * c_out, c_out, 1, false};
                j.output_columns = c_out;
                j.out_y = oy;
                j.out_x = ox;
                js.jobs.push_back(std::move(j));
            }
        }
        return js;
    }

    const Count c_job = std::get<DepthwiseBlock>(strategy).c_job;
    require(c_job >= 1 && c_job <= c_in, ErrorCode::InvalidArgument, "c_job must be in [1, c]");
    const Count groups = (c_in + c_job - 1) / c_job;
    js.jobs.reserve(static_cast<std::size_t>(groups * js.output.pixels()));
    for (Count g = 0; g < groups; ++g) {
        const Count base = g * c_job;
        const Count valid = std::min(c_job, c_in - base);
        for (Count oy = 0; oy < js.output.height; ++oy) {
            for (Count ox = 0; ox < js.output.width; ++ox) {
                Job j;
                j.region = g;
                j.group = g;
                for (Count ky = 0; ky < k; ++ky) {
                    for (Count kx = 0; kx < k; ++kx) {
                        const Count iy = oy * s - p + ky;
                        const Count ix = ox * s - p + kx;
                        if (inside(iy, ix)) j.inputs.push_back({pixel_offset(iy, ix) + base, valid, 1, false});
                        else j.inputs.push_back({0, valid, 1, true});
                        if (valid < c_job) j.inputs.push_back({0, c_job - valid, 1, true});
                    }
                }
                j.output = {(oy * js.output.width + ox) * c_out + base, valid, 1, false};
                j.output_columns = c_job;
                j.out_y = oy;
                j.out_x = ox;
                js.jobs.push_back(std::move(j));
            }
        }
    }
    return js;
}

// ---------------------------------------------------------------------------
// Network-wide device accounting
// ---------------------------------------------------------------------------

using LayerPolicy = std::function<MappingStrategy(const ShapedLayer&)>;

/// Every depthwise layer as one full-diagonal region (c_job = c).
[[nodiscard]] inline LayerPolicy full_diagonal_policy() {
    return [](const ShapedLayer& l) { return natural_strategy(l.layer, input_channels(l.layer)); };
}

[[nodiscard]] inline LayerPolicy uniform_policy(Count c_job) {
    return [c_job](const ShapedLayer& l) { return natural_strategy(l.layer, c_job); };
}

struct DeviceCount {
    Count devices_total = 0;
    Count devices_useful = 0;
    Count params = 0;
    double ratio = 0.0;  // devices_total / (2 * params)
};

[[nodiscard]] inline DeviceCount network_device_count(const NetworkDescriptor& net, const LayerPolicy& policy,
                                                      bool include_stem_head = true) {
    DeviceCount d;
    for (const auto& l : net.layers) {
        if (!include_stem_head && (l.role == LayerRole::Stem || l.role == LayerRole::Head)) continue;
        const CrossbarAllocation a = map_layer(l.layer, policy(l));
        d.devices_total += a.devices_total();
        d.devices_useful += a.devices_useful();
        d.params += l.params();
    }
    d.ratio = d.params == 0 ? 0.0
                            : static_cast<double>(d.devices_total) /
                                  static_cast<double>(xbar::kDevicesPerWeight * d.params);
    return d;
}

// ---------------------------------------------------------------------------
// Whole-workload placement and the textual plan
// ---------------------------------------------------------------------------

struct PlacedLayer {
    CrossbarAllocation allocation;
    std::vector<Region> placed;  // allocation regions translated into the shared array
};

/// Packs every layer's regions into one logical array.
[[nodiscard]] inline std::vector<PlacedLayer> pack(const std::vector<CrossbarAllocation>& allocs,
                                                   ArrayLimits limits = {}) {
    ShelfPacker packer(limits);
    std::vector<PlacedLayer> out;
    for (const auto& a : allocs) {
        PlacedLayer pl{a, {}};
        for (const auto& r : a.regions) pl.placed.push_back(packer.place(r.rows, r.cols));
        out.push_back(std::move(pl));
    }
    return out;
}

inline void write_plan(std::ostream& os, const std::vector<CrossbarAllocation>& allocs) {
    os << "layer,strategy,regions,rows_used,cols_used,weights_total,weights_useful,devices_total,utilization\n";
    Count total = 0, useful = 0;
    for (const auto& a : allocs) {
        std::ostringstream u;
        u.setf(std::ios::fixed);
        u.precision(6);
        u << utilization(a);
        os << a.layer << ',' << to_string(a.strategy) << ',' << a.regions.size() << ',' << a.rows_used << ','
           << a.cols_used << ',' << a.weights_total << ',' << a.weights_useful << ',' << a.devices_total()
           << ',' << u.str() << '\n';
        total += a.weights_total;
        useful += a.weights_useful;
    }
    std::ostringstream u;
    u.setf(std::ios::fixed);
    u.precision(6);
    u << (total == 0 ? 0.0 : static_cast<double>(useful) / static_cast<double>(total));
    os << "TOTAL,,,,," << total << ',' << useful << ',' << total * xbar::kDevicesPerWeight << ',' << u.str()
       << '\n';
}

} // namespace imasim::mapper
