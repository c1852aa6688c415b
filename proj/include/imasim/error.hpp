#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace imasim {

enum class ErrorCode {
    ChannelMismatch,
    InvalidArgument,
    OutOfRange,
    OutOfBounds,
    RegionOverflow,
    RegionOverlap,
    DimensionMismatch,
    SplitRequired,
    LayoutMismatch,
    StrategyMismatch,
    Validation,
    Parse,
    Io,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::RegionOverflow: return "RegionOverflow";
    case ErrorCode::RegionOverlap: return "RegionOverlap";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SplitRequired: return "SplitRequired";
    case ErrorCode::LayoutMismatch: return "LayoutMismatch";
    case ErrorCode::StrategyMismatch: return "StrategyMismatch";
    case ErrorCode::Validation: return "Validation";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

} // namespace imasim
