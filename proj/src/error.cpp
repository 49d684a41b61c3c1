#include "htfid/error.hpp"

namespace htfid {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::Config: return "config";
    case ErrorCode::AmbiguousSwitching: return "ambiguous-switching";
    case ErrorCode::EventLocalization: return "event-localization";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::NotSettled: return "not-settled";
    case ErrorCode::ResamplingRequired: return "resampling-required";
    case ErrorCode::SingularFrequency: return "singular-frequency";
    case ErrorCode::Aliasing: return "aliasing";
    case ErrorCode::IllConditioned: return "ill-conditioned";
    case ErrorCode::NoData: return "no-data";
    }
    return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace htfid
