#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace htfid {

enum class ErrorCode {
    InvalidInput,
    Config,
    AmbiguousSwitching,
    EventLocalization,
    Divergence,
    NotSettled,
    ResamplingRequired,
    SingularFrequency,
    Aliasing,
    IllConditioned,
    NoData,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable error category.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace htfid
