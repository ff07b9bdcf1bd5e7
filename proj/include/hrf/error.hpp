#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hrf {

enum class ErrorCode {
    config,
    grid_mismatch,
    invalid_frequency,
    invalid_dilation,
    parameter,
    unsupported_dimension,
    dimension_mismatch,
    undefined_bounds,
    prerequisite_failure,
    index_mismatch,
    dimension_cap,
    empty_family,
    truncation_mismatch,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::config: return "config";
    case ErrorCode::grid_mismatch: return "grid-mismatch";
    case ErrorCode::invalid_frequency: return "invalid-frequency";
    case ErrorCode::invalid_dilation: return "invalid-dilation";
    case ErrorCode::parameter: return "parameter";
    case ErrorCode::unsupported_dimension: return "unsupported-dimension";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::undefined_bounds: return "undefined-bounds";
    case ErrorCode::prerequisite_failure: return "prerequisite-failure";
    case ErrorCode::index_mismatch: return "index-mismatch";
    case ErrorCode::dimension_cap: return "dimension-cap";
    case ErrorCode::empty_family: return "empty-family";
    case ErrorCode::truncation_mismatch: return "truncation-mismatch";
    }
    return "unknown";
}

/// Every failure raised by the library. `key()` names the offending
/// configuration key or parameter when one is known.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string key = {})
        : std::runtime_error(std::string(to_string(code)) + ": " + message
                             + (key.empty() ? std::string() : " [" + key + "]")),
          code_(code), key_(std::move(key)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& key() const noexcept { return key_; }

private:
    ErrorCode code_;
    std::string key_;
};

}  // namespace hrf
