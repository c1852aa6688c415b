#pragma once

// Functional model of the PCM crossbar: integer weights on a grid of
// wordlines (rows, driven by 8-bit DACs) and bitlines (columns, sensed by
// 8-bit ADCs). The ADC applies per-column scale, rounding and clamping.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "imasim/error.hpp"
#include "imasim/workload.hpp"

namespace imasim::xbar {

inline constexpr int kWeightMin = -8;
inline constexpr int kWeightMax = 7;
inline constexpr int kInputMax = 255;
inline constexpr int kOutputMin = -128;
inline constexpr int kOutputMax = 127;
inline constexpr Count kDevicesPerWeight = 2;

struct CrossbarConfig {
    Count rows = 1;
    Count cols = 1;
    static constexpr int weight_bits = 4;
    static constexpr int input_bits = 8;
    static constexpr int output_bits = 8;
    static constexpr Count devices_per_weight = kDevicesPerWeight;

    void validate() const {
        require(rows >= 1 && cols >= 1, ErrorCode::InvalidArgument, "crossbar dimensions must be >= 1");
    }
};

struct Region {
    Count row_off = 0;
    Count col_off = 0;
    Count rows = 0;
    Count cols = 0;

    [[nodiscard]] Count cells() const noexcept { return rows * cols; }
    [[nodiscard]] Count row_end() const noexcept { return row_off + rows; }
    [[nodiscard]] Count col_end() const noexcept { return col_off + cols; }

    [[nodiscard]] bool overlaps(const Region& o) const noexcept {
        return row_off < o.row_end() && o.row_off < row_end() && col_off < o.col_end() &&
               o.col_off < col_end();
    }

    friend bool operator==(const Region&, const Region&) = default;
};

/// Positive rational ADC gain num/den.
struct Scale {
    std::int64_t num = 1;
    std::int64_t den = 1;

    [[nodiscard]] double value() const noexcept {
        return static_cast<double>(num) / static_cast<double>(den);
    }
    friend bool operator==(const Scale&, const Scale&) = default;
};

[[nodiscard]] inline std::int8_t clamp_output(std::int64_t v) noexcept {
    return static_cast<std::int8_t>(std::clamp<std::int64_t>(v, kOutputMin, kOutputMax));
}

__extension__ using Int128 = __int128;

/// round_half_away_from_zero(acc * num / den), computed exactly.
[[nodiscard]] inline std::int64_t scale_round(std::int64_t acc, const Scale& s) noexcept {
    const Int128 q = static_cast<Int128>(acc) * s.num;
    const Int128 mag = q < 0 ? -q : q;
    const Int128 r = (2 * mag + s.den) / (2 * static_cast<Int128>(s.den));
    const Int128 clipped = std::min<Int128>(r, std::numeric_limits<std::int64_t>::max());
    return q < 0 ? -static_cast<std::int64_t>(clipped) : static_cast<std::int64_t>(clipped);
}

/// ADC transfer function shared by the crossbar and the golden model.
[[nodiscard]] inline std::int8_t requantize(std::int64_t acc, const Scale& s) noexcept {
    return clamp_output(scale_round(acc, s));
}

[[nodiscard]] inline std::int8_t requantize(double acc, const Scale& s) noexcept {
    const double v = std::round(acc * s.value());
    if (!(v > kOutputMin)) return kOutputMin;  // also catches NaN
    if (v >= kOutputMax) return kOutputMax;
    return static_cast<std::int8_t>(v);
}

/// Per-column scales. A single entry applies to every column.
struct AdcConfig {
    std::vector<Scale> scales{Scale{}};

    static AdcConfig uniform(Scale s = {}) { return AdcConfig{{s}}; }

    [[nodiscard]] const Scale& scale_for(Count col) const {
        return scales.size() == 1 ? scales.front() : scales.at(static_cast<std::size_t>(col));
    }

    void validate(Count cols) const {
        require(scales.size() == 1 || static_cast<Count>(scales.size()) == cols,
                ErrorCode::DimensionMismatch, "ADC scale count must be 1 or match column count");
        for (const auto& s : scales)
            require(s.num > 0 && s.den > 0, ErrorCode::InvalidArgument, "ADC scale must be positive");
    }
};

/// Gaussian read-noise generator. Each simulation context owns one; it is
/// never shared implicitly between arrays.
class NoiseSource {
public:
    explicit NoiseSource(std::uint64_t seed) : rng_(seed) {}

    double gaussian(double sigma) {
        std::normal_distribution<double> dist(0.0, sigma);
        return dist(rng_);
    }

private:
    std::mt19937_64 rng_;
};

struct NoiseParams {
    double read_sigma = 0.0;     // per-mvm perturbation of the effective weight
    double program_sigma = 0.0;  // static offset sampled once when a cell is programmed
    std::uint64_t seed = 0;
};

enum class CellState : std::uint8_t { Unprogrammed = 0, Weight = 1, StructuralZero = 2 };

class ProgrammedArray {
public:
    explicit ProgrammedArray(CrossbarConfig cfg, NoiseParams noise = {})
        : cfg_(cfg), noise_(noise), program_rng_(noise.seed ^ 0x9e3779b97f4a7c15ULL) {
        cfg_.validate();
        require(noise.read_sigma >= 0.0 && noise.program_sigma >= 0.0, ErrorCode::InvalidArgument,
                "noise sigma must be >= 0");
        weights_.assign(static_cast<std::size_t>(cfg_.rows * cfg_.cols), 0);
        state_.assign(weights_.size(), CellState::Unprogrammed);
    }

    [[nodiscard]] const CrossbarConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const NoiseParams& noise() const noexcept { return noise_; }
    [[nodiscard]] Count rows() const noexcept { return cfg_.rows; }
    [[nodiscard]] Count cols() const noexcept { return cfg_.cols; }
    [[nodiscard]] const std::vector<Region>& regions() const noexcept { return regions_; }

    /// Writes a row-major block of weights into `region`. Cells flagged in
    /// `structural` hold a forced zero but still consume devices.
    void program(const Region& region, std::span<const int> weights,
                 std::span<const std::uint8_t> structural = {}) {
        require(region.rows >= 1 && region.cols >= 1, ErrorCode::InvalidArgument, "empty region");
        if (region.row_off < 0 || region.col_off < 0 || region.row_end() > cfg_.rows ||
            region.col_end() > cfg_.cols) {
            throw Error(ErrorCode::RegionOverflow, "region exceeds array bounds");
        }
        require(static_cast<Count>(weights.size()) == region.cells(), ErrorCode::DimensionMismatch,
                "weight block size does not match region");
        require(structural.empty() || structural.size() == weights.size(), ErrorCode::DimensionMismatch,
                "structural mask size does not match region");
        for (const Region& r : regions_)
            if (r.overlaps(region)) throw Error(ErrorCode::RegionOverlap, "region overlaps a programmed region");
        for (std::size_t i = 0; i < weights.size(); ++i) {
            const int w = weights[i];
            if (w < kWeightMin || w > kWeightMax)
                throw Error(ErrorCode::OutOfRange, "weight " + std::to_string(w) + " outside [-8, 7]");
            if (!structural.empty() && structural[i] && w != 0)
                throw Error(ErrorCode::InvalidArgument, "structural cell must hold 0");
        }

        for (Count r = 0; r < region.rows; ++r) {
            for (Count c = 0; c < region.cols; ++c) {
                const auto src = static_cast<std::size_t>(r * region.cols + c);
                const auto dst = index(region.row_off + r, region.col_off + c);
                weights_[dst] = static_cast<std::int8_t>(weights[src]);
                state_[dst] = (!structural.empty() && structural[src]) ? CellState::StructuralZero
                                                                       : CellState::Weight;
            }
        }
        if (noise_.program_sigma > 0.0) {
            if (offsets_.empty()) offsets_.assign(weights_.size(), 0.0);
            std::normal_distribution<double> dist(0.0, noise_.program_sigma);
            for (Count r = 0; r < region.rows; ++r)
                for (Count c = 0; c < region.cols; ++c)
                    offsets_[index(region.row_off + r, region.col_off + c)] = dist(program_rng_);
        }
        regions_.push_back(region);
        devices_ += region.cells() * kDevicesPerWeight;
    }

    void program(const Region& region, std::initializer_list<int> weights) {
        program(region, std::span<const int>(weights.begin(), weights.size()));
    }

    [[nodiscard]] int read_conductance(Count row, Count col) const {
        if (row < 0 || col < 0 || row >= cfg_.rows || col >= cfg_.cols)
            throw Error(ErrorCode::OutOfBounds, "cell (" + std::to_string(row) + ", " +
                                                    std::to_string(col) + ") outside array");
        return weights_[index(row, col)];
    }

    [[nodiscard]] CellState cell_state(Count row, Count col) const {
        (void)read_conductance(row, col);
        return state_[index(row, col)];
    }

    /// Physical devices consumed so far (two per programmed weight).
    [[nodiscard]] Count devices_consumed() const noexcept { return devices_; }
    [[nodiscard]] Count weights_programmed() const noexcept { return devices_ / kDevicesPerWeight; }

    /// Full-array MVM: drives every wordline with x and senses every bitline.
    [[nodiscard]] std::vector<std::int8_t> mvm(std::span<const std::uint8_t> x, const AdcConfig& adc,
                                               NoiseSource* noise = nullptr) const {
        return mvm(Region{0, 0, cfg_.rows, cfg_.cols}, x, adc, noise);
    }

    /// MVM restricted to one region: |x| = region.rows, result has
    /// region.cols entries.
    [[nodiscard]] std::vector<std::int8_t> mvm(const Region& region, std::span<const std::uint8_t> x,
                                               const AdcConfig& adc, NoiseSource* noise = nullptr) const {
        if (region.row_off < 0 || region.col_off < 0 || region.row_end() > cfg_.rows ||
            region.col_end() > cfg_.cols)
            throw Error(ErrorCode::RegionOverflow, "mvm region exceeds array bounds");
        if (static_cast<Count>(x.size()) != region.rows)
            throw Error(ErrorCode::DimensionMismatch, "input length " + std::to_string(x.size()) +
                                                          " != rows " + std::to_string(region.rows));
        adc.validate(region.cols);

        std::vector<std::int8_t> y(static_cast<std::size_t>(region.cols));
        const bool noisy = noise_.read_sigma > 0.0 || !offsets_.empty();
        if (!noisy) {
            std::vector<std::int64_t> acc(y.size(), 0);
            for (Count r = 0; r < region.rows; ++r) {
                const std::int64_t xv = x[static_cast<std::size_t>(r)];
                if (xv == 0) continue;
                const std::int8_t* row = &weights_[index(region.row_off + r, region.col_off)];
                for (Count c = 0; c < region.cols; ++c) acc[static_cast<std::size_t>(c)] += row[c] * xv;
            }
            for (Count c = 0; c < region.cols; ++c)
                y[static_cast<std::size_t>(c)] = requantize(acc[static_cast<std::size_t>(c)], adc.scale_for(c));
            return y;
        }

        require(noise_.read_sigma == 0.0 || noise != nullptr, ErrorCode::InvalidArgument,
                "read noise enabled but no noise source supplied");
        std::vector<double> acc(y.size(), 0.0);
        for (Count r = 0; r < region.rows; ++r) {
            const double xv = x[static_cast<std::size_t>(r)];
            for (Count c = 0; c < region.cols; ++c) {
                const auto i = index(region.row_off + r, region.col_off + c);
                double w = weights_[i];
                if (!offsets_.empty()) w += offsets_[i];
                if (noise_.read_sigma > 0.0) w += noise->gaussian(noise_.read_sigma);
                acc[static_cast<std::size_t>(c)] += w * xv;
            }
        }
        for (Count c = 0; c < region.cols; ++c)
            y[static_cast<std::size_t>(c)] = requantize(acc[static_cast<std::size_t>(c)], adc.scale_for(c));
        return y;
    }

    /// Textual snapshot: header, dense weight grid, dense cell-state grid.
    /// Static programming offsets are not part of the snapshot.
    void dump(std::ostream& os) const {
        os << std::setprecision(17) << "imasim-xbar 1\n";
        os << "rows " << cfg_.rows << "\ncols " << cfg_.cols << '\n';
        os << "read_sigma " << noise_.read_sigma << "\nprogram_sigma " << noise_.program_sigma << '\n';
        os << "seed " << noise_.seed << '\n';
        os << "regions " << regions_.size() << '\n';
        for (const Region& r : regions_)
            os << r.row_off << ' ' << r.col_off << ' ' << r.rows << ' ' << r.cols << '\n';
        os << "weights\n";
        write_grid(os, [&](std::size_t i) { return static_cast<int>(weights_[i]); });
        os << "state\n";
        write_grid(os, [&](std::size_t i) { return static_cast<int>(state_[i]); });
    }

    [[nodiscard]] static ProgrammedArray load(std::istream& is) {
        const auto expect = [&](const std::string& key) {
            std::string tok;
            if (!(is >> tok) || tok != key) throw Error(ErrorCode::Parse, "snapshot: expected '" + key + "'");
        };
        const auto read_num = [&](auto& v, const std::string& key) {
            expect(key);
            if (!(is >> v)) throw Error(ErrorCode::Parse, "snapshot: bad value for '" + key + "'");
        };
        expect("imasim-xbar");
        int version = 0;
        if (!(is >> version) || version != 1) throw Error(ErrorCode::Parse, "snapshot: unsupported version");
        CrossbarConfig cfg;
        NoiseParams np;
        std::size_t n_regions = 0;
        read_num(cfg.rows, "rows");
        read_num(cfg.cols, "cols");
        read_num(np.read_sigma, "read_sigma");
        read_num(np.program_sigma, "program_sigma");
        read_num(np.seed, "seed");
        read_num(n_regions, "regions");
        np.program_sigma = 0.0;  // offsets are not persisted

        ProgrammedArray a(cfg, np);
        std::vector<Region> regions(n_regions);
        for (auto& r : regions)
            if (!(is >> r.row_off >> r.col_off >> r.rows >> r.cols))
                throw Error(ErrorCode::Parse, "snapshot: bad region line");
        expect("weights");
        std::vector<int> w(a.weights_.size());
        for (auto& v : w)
            if (!(is >> v)) throw Error(ErrorCode::Parse, "snapshot: truncated weight grid");
        expect("state");
        std::vector<int> st(a.weights_.size());
        for (auto& v : st)
            if (!(is >> v) || v < 0 || v > 2) throw Error(ErrorCode::Parse, "snapshot: bad state grid");

        for (const Region& r : regions) {
            std::vector<int> block;
            std::vector<std::uint8_t> structural;
            for (Count i = 0; i < r.rows; ++i)
                for (Count j = 0; j < r.cols; ++j) {
                    const auto k = a.index(r.row_off + i, r.col_off + j);
                    block.push_back(w[k]);
                    structural.push_back(st[k] == static_cast<int>(CellState::StructuralZero));
                }
            a.program(r, block, structural);
        }
        for (std::size_t i = 0; i < w.size(); ++i)
            if (a.weights_[i] != w[i] || static_cast<int>(a.state_[i]) != st[i])
                throw Error(ErrorCode::Parse, "snapshot: grid disagrees with region table");
        return a;
    }

    [[nodiscard]] std::string to_text() const {
        std::ostringstream os;
        dump(os);
        return os.str();
    }

private:
    [[nodiscard]] std::size_t index(Count row, Count col) const noexcept {
        return static_cast<std::size_t>(row * cfg_.cols + col);
    }

    template <class Get>
    void write_grid(std::ostream& os, Get get) const {
        for (Count r = 0; r < cfg_.rows; ++r) {
            for (Count c = 0; c < cfg_.cols; ++c) {
                if (c) os << ' ';
                os << get(index(r, c));
            }
            os << '\n';
        }
    }

    CrossbarConfig cfg_;
    NoiseParams noise_;
    std::mt19937_64 program_rng_;
    std::vector<std::int8_t> weights_;
    std::vector<CellState> state_;
    std::vector<double> offsets_;
    std::vector<Region> regions_;
    Count devices_ = 0;
};

} // namespace imasim::xbar
