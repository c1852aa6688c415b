#pragma once

// Integer golden model of quantized convolution and the end-to-end check
// that mapper + job stream + crossbar reproduce it bit for bit.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "imasim/error.hpp"
#include "imasim/mapper.hpp"
#include "imasim/workload.hpp"
#include "imasim/xbar.hpp"

namespace imasim::verify {

inline constexpr int kAccumulatorBits = 32;

template <typename T>
struct QuantTensor {
    TensorShape shape;
    std::vector<T> data;

    QuantTensor() = default;
    explicit QuantTensor(TensorShape s, T fill = T{}) : shape(s) {
        shape.validate();
        require(s.layout == Layout::HWC, ErrorCode::LayoutMismatch, "QuantTensor is HWC only");
        data.assign(static_cast<std::size_t>(s.elements()), fill);
    }

    [[nodiscard]] std::size_t index(Count y, Count x, Count c) const noexcept {
        return static_cast<std::size_t>((y * shape.width + x) * shape.channels + c);
    }
    [[nodiscard]] T& at(Count y, Count x, Count c) { return data[index(y, x, c)]; }
    [[nodiscard]] const T& at(Count y, Count x, Count c) const { return data[index(y, x, c)]; }

    void validate() const {
        require(static_cast<Count>(data.size()) == shape.elements(), ErrorCode::DimensionMismatch,
                "tensor data length does not match its shape");
    }

    friend bool operator==(const QuantTensor&, const QuantTensor&) = default;
};

using Activations = QuantTensor<std::uint8_t>;
using Outputs = QuantTensor<std::int8_t>;

/// Number of weights a layer expects. Layouts: standard/pointwise
/// [c_out][kh][kw][c_in], depthwise [c][kh][kw].
[[nodiscard]] inline Count weight_count(const LayerDescriptor& l) { return params(l); }

[[nodiscard]] inline Count accumulator_bound(const LayerDescriptor& l) {
    const Count k = kernel_size(l);
    const Count fan_in = is_depthwise(l) ? k * k : k * k * input_channels(l);
    return fan_in * (-xbar::kWeightMin) * xbar::kInputMax;
}

inline void check_operands(const LayerDescriptor& l, const Activations& in, std::span<const int> w,
                           const xbar::AdcConfig& adc) {
    validate(l);
    in.validate();
    require(static_cast<Count>(w.size()) == weight_count(l), ErrorCode::DimensionMismatch,
            "expected " + std::to_string(weight_count(l)) + " weights, got " + std::to_string(w.size()));
    for (int v : w)
        require(v >= xbar::kWeightMin && v <= xbar::kWeightMax, ErrorCode::OutOfRange,
                "weight " + std::to_string(v) + " outside [-8, 7]");
    adc.validate(output_channels(l));
    require(accumulator_bound(l) <= std::numeric_limits<std::int32_t>::max(), ErrorCode::OutOfRange,
            "layer fan-in overflows the " + std::to_string(kAccumulatorBits) + "-bit accumulator");
}

/// Direct nested-loop convolution with wide accumulation, then the ADC
/// transfer function of the crossbar.
[[nodiscard]] inline Outputs reference_conv(const LayerDescriptor& l, const Activations& in,
                                            std::span<const int> w, const xbar::AdcConfig& adc) {
    check_operands(l, in, w, adc);
    const TensorShape os = output_shape(l, in.shape);
    Outputs out(os);
    const Count k = kernel_size(l), s = stride_of(l), p = pad_of(l), ci = in.shape.channels;
    const bool dw = is_depthwise(l);

    for (Count oy = 0; oy < os.height; ++oy) {
        for (Count ox = 0; ox < os.width; ++ox) {
            for (Count co = 0; co < os.channels; ++co) {
                std::int64_t acc = 0;
                for (Count ky = 0; ky < k; ++ky) {
                    const Count iy = oy * s - p + ky;
                    if (iy < 0 || iy >= in.shape.height) continue;
                    for (Count kx = 0; kx < k; ++kx) {
                        const Count ix = ox * s - p + kx;
                        if (ix < 0 || ix >= in.shape.width) continue;
                        if (dw) {
                            acc += static_cast<std::int64_t>(w[static_cast<std::size_t>((co * k + ky) * k + kx)]) *
                                   in.at(iy, ix, co);
                        } else {
                            for (Count c = 0; c < ci; ++c)
                                acc += static_cast<std::int64_t>(
                                           w[static_cast<std::size_t>(((co * k + ky) * k + kx) * ci + c)]) *
                                       in.at(iy, ix, c);
                        }
                    }
                }
                out.at(oy, ox, co) = xbar::requantize(acc, adc.scale_for(co));
            }
        }
    }
    return out;
}

/// Overwrites one cell of one region before programming.
struct CellFault {
    Count region = 0;
    Count row = 0;
    Count col = 0;
    int value = 0;
};

/// Row-major weight block and structural mask of one mapped region.
struct RegionImage {
    std::vector<int> weights;
    std::vector<std::uint8_t> structural;
};

[[nodiscard]] inline std::vector<RegionImage> region_images(const LayerDescriptor& l,
                                                            const mapper::CrossbarAllocation& a,
                                                            std::span<const int> w) {
    const Count k = kernel_size(l);
    std::vector<RegionImage> out;
    if (!is_depthwise(l)) {
        const Count ci = input_channels(l), co = output_channels(l);
        const xbar::Region& r = a.regions.at(0);
        RegionImage img{std::vector<int>(static_cast<std::size_t>(r.cells()), 0),
                        std::vector<std::uint8_t>(static_cast<std::size_t>(r.cells()), 0)};
        // crossbar row = (ky*k + kx)*c_in + c, column = output channel
        for (Count o = 0; o < co; ++o)
            for (Count t = 0; t < k * k; ++t)
                for (Count c = 0; c < ci; ++c)
                    img.weights[static_cast<std::size_t>((t * ci + c) * co + o)] =
                        w[static_cast<std::size_t>((o * k * k + t) * ci + c)];
        out.push_back(std::move(img));
        return out;
    }
    const Count c = input_channels(l);
    const Count c_job = std::get<mapper::DepthwiseBlock>(a.strategy).c_job;
    for (std::size_t g = 0; g < a.regions.size(); ++g) {
        const xbar::Region& r = a.regions[g];
        RegionImage img{std::vector<int>(static_cast<std::size_t>(r.cells()), 0),
                        std::vector<std::uint8_t>(static_cast<std::size_t>(r.cells()), 1)};
        const Count base = static_cast<Count>(g) * c_job;
        for (Count j = 0; j < c_job && base + j < c; ++j) {
            for (Count t = 0; t < k * k; ++t) {
                const auto cell = static_cast<std::size_t>((t * c_job + j) * c_job + j);
                img.weights[cell] = w[static_cast<std::size_t>((base + j) * k * k + t)];
                img.structural[cell] = 0;
            }
        }
        out.push_back(std::move(img));
    }
    return out;
}

/// Programs the mapped layer and runs its whole job stream through the
/// crossbar (noise disabled).
[[nodiscard]] inline Outputs emulate(const LayerDescriptor& l, const mapper::MappingStrategy& strategy,
                                     const Activations& in, std::span<const int> w, const xbar::AdcConfig& adc,
                                     const std::optional<CellFault>& fault = std::nullopt) {
    check_operands(l, in, w, adc);
    const mapper::CrossbarAllocation a = mapper::map_layer(l, strategy);
    std::vector<RegionImage> images = region_images(l, a, w);
    if (fault) {
        RegionImage& img = images.at(static_cast<std::size_t>(fault->region));
        const xbar::Region& r = a.regions.at(static_cast<std::size_t>(fault->region));
        require(fault->row >= 0 && fault->row < r.rows && fault->col >= 0 && fault->col < r.cols,
                ErrorCode::OutOfBounds, "fault cell outside region");
        const auto cell = static_cast<std::size_t>(fault->row * r.cols + fault->col);
        img.weights[cell] = fault->value;
        img.structural[cell] = 0;
    }

    xbar::ProgrammedArray array(xbar::CrossbarConfig{a.rows_used, a.cols_used});
    for (std::size_t i = 0; i < images.size(); ++i)
        array.program(a.regions[i], images[i].weights, images[i].structural);

    const mapper::JobStream js = mapper::job_stream(l, in.shape, strategy);
    Outputs out(js.output);
    std::vector<std::uint8_t> x;
    for (const mapper::Job& job : js.jobs) {
        x.clear();
        for (const mapper::Segment& s : job.inputs) {
            if (s.zero_fill) {
                x.insert(x.end(), static_cast<std::size_t>(s.length), 0);
            } else {
                for (Count i = 0; i < s.length; ++i)
                    x.push_back(in.data.at(static_cast<std::size_t>(s.offset + i * s.stride)));
            }
        }
        const xbar::Region& r = a.regions.at(static_cast<std::size_t>(job.region));
        // column j of this region senses output channel (output.offset % c_out) + j
        const Count ch0 = job.output.offset % js.output.channels;
        xbar::AdcConfig col_adc;
        col_adc.scales.clear();
        for (Count j = 0; j < r.cols; ++j)
            col_adc.scales.push_back(ch0 + j < js.output.channels ? adc.scale_for(ch0 + j) : xbar::Scale{});
        const std::vector<std::int8_t> y = array.mvm(r, x, col_adc);
        for (Count i = 0; i < job.output.length; ++i)
            out.data.at(static_cast<std::size_t>(job.output.offset + i)) = y[static_cast<std::size_t>(i)];
    }
    return out;
}

struct Mismatch {
    Count index = 0;
    Count y = 0, x = 0, c = 0;
    int expected = 0;
    int actual = 0;
};

struct EquivalenceResult {
    bool pass = true;
    Count compared = 0;
    std::optional<Mismatch> first_mismatch;

    [[nodiscard]] std::string describe() const {
        if (pass) return "pass (" + std::to_string(compared) + " outputs)";
        const Mismatch& m = *first_mismatch;
        std::ostringstream os;
        os << "mismatch at index " << m.index << " (y=" << m.y << ", x=" << m.x << ", c=" << m.c
           << "): expected " << m.expected << ", got " << m.actual;
        return os.str();
    }
};

[[nodiscard]] inline EquivalenceResult compare(const Outputs& expected, const Outputs& actual) {
    require(expected.shape == actual.shape, ErrorCode::DimensionMismatch, "output shapes differ");
    EquivalenceResult r;
    r.compared = static_cast<Count>(expected.data.size());
    for (std::size_t i = 0; i < expected.data.size(); ++i) {
        if (expected.data[i] == actual.data[i]) continue;
        const Count idx = static_cast<Count>(i);
        const Count c = idx % expected.shape.channels;
        const Count px = idx / expected.shape.channels;
        r.pass = false;
        r.first_mismatch = Mismatch{idx, px / expected.shape.width, px % expected.shape.width, c,
                                    expected.data[i], actual.data[i]};
        break;
    }
    return r;
}

[[nodiscard]] inline EquivalenceResult check_equivalence(const LayerDescriptor& l,
                                                         const mapper::MappingStrategy& strategy,
                                                         const Activations& in, std::span<const int> w,
                                                         const xbar::AdcConfig& adc,
                                                         const std::optional<CellFault>& fault = std::nullopt) {
    return compare(reference_conv(l, in, w, adc), emulate(l, strategy, in, w, adc, fault));
}

// ---------------------------------------------------------------------------
// Randomized suite
// ---------------------------------------------------------------------------

struct RandomCase {
    LayerDescriptor layer;
    mapper::MappingStrategy strategy;
    Activations input;
    std::vector<int> weights;
    xbar::AdcConfig adc;

    [[nodiscard]] std::string describe() const {
        std::ostringstream os;
        os << kind_name(layer) << " k=" << kernel_size(layer) << " s=" << stride_of(layer) << " p=" << pad_of(layer)
           << " c_in=" << input_channels(layer) << " c_out=" << output_channels(layer) << " in=" << input.shape.height
           << "x" << input.shape.width << " " << mapper::to_string(strategy);
        return os.str();
    }
};

class CaseGenerator {
public:
    explicit CaseGenerator(std::uint64_t seed) : rng_(seed) {}

    RandomCase next() {
        RandomCase rc;
        const int kind = uniform(0, 2);
        const Count k = kind == 1 ? 1 : std::array<Count, 3>{1, 3, 5}[static_cast<std::size_t>(uniform(0, 2))];
        const Count s = uniform(1, 2);
        const Count p = uniform(0, static_cast<int>(k / 2));
        Count h = uniform(1, 7), w = uniform(1, 7);
        h = std::max(h, k - 2 * p);
        w = std::max(w, k - 2 * p);
        const Count c_in = uniform(1, 12);
        if (kind == 0) {
            rc.layer = StandardConv{k, s, p, c_in, uniform(1, 10)};
            rc.strategy = mapper::StandardIm2col{};
        } else if (kind == 1) {
            rc.layer = PointwiseConv{c_in, uniform(1, 10)};
            rc.strategy = mapper::Pointwise{};
        } else {
            rc.layer = DepthwiseConv{k, s, p, c_in};
            rc.strategy = mapper::DepthwiseBlock{uniform(1, static_cast<int>(c_in))};
        }
        rc.input = Activations(TensorShape{h, w, c_in, Layout::HWC});
        for (auto& v : rc.input.data) v = static_cast<std::uint8_t>(uniform(0, xbar::kInputMax));
        rc.weights.resize(static_cast<std::size_t>(weight_count(rc.layer)));
        for (auto& v : rc.weights) v = uniform(xbar::kWeightMin, xbar::kWeightMax);

        // Denominators near the typical accumulator magnitude keep most
        // outputs off the clamp rails.
        const Count fan_in = accumulator_bound(rc.layer) / (-xbar::kWeightMin * xbar::kInputMax);
        const int den_max = static_cast<int>(std::max<Count>(2, fan_in * 64));
        const Count c_out = output_channels(rc.layer);
        const int n_scales = uniform(0, 1) == 0 ? 1 : static_cast<int>(c_out);
        rc.adc.scales.clear();
        for (int i = 0; i < n_scales; ++i) rc.adc.scales.push_back({uniform(1, 3), uniform(1, den_max)});
        return rc;
    }

private:
    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    std::mt19937_64 rng_;
};

struct SuiteResult {
    std::uint64_t seed = 0;
    Count cases = 0;
    Count passed = 0;
    Count standard = 0, pointwise = 0, depthwise = 0;
    Count padded_groups = 0;   // depthwise cases with c_job not dividing c
    Count border_cases = 0;    // cases with pad > 0
    std::vector<std::string> failures;

    [[nodiscard]] bool ok() const noexcept { return passed == cases; }
};

[[nodiscard]] inline SuiteResult run_random_suite(std::uint64_t seed, Count cases) {
    require(cases >= 0, ErrorCode::Validation, "case count must be >= 0");
    SuiteResult r;
    r.seed = seed;
    r.cases = cases;
    CaseGenerator gen(seed);
    for (Count i = 0; i < cases; ++i) {
        const RandomCase rc = gen.next();
        if (std::holds_alternative<StandardConv>(rc.layer)) ++r.standard;
        else if (std::holds_alternative<PointwiseConv>(rc.layer)) ++r.pointwise;
        else ++r.depthwise;
        if (const auto* b = std::get_if<mapper::DepthwiseBlock>(&rc.strategy))
            if (input_channels(rc.layer) % b->c_job != 0) ++r.padded_groups;
        if (pad_of(rc.layer) > 0) ++r.border_cases;
        const EquivalenceResult e = check_equivalence(rc.layer, rc.strategy, rc.input, rc.weights, rc.adc);
        if (e.pass) ++r.passed;
        else if (r.failures.size() < 10) r.failures.push_back("case " + std::to_string(i) + " [" + rc.describe() +
                                                             "]: " + e.describe());
    }
    return r;
}

} // namespace imasim::verify
