#include "campaignfx/error.hpp"

namespace campaignfx {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::MalformedRecord: return "MalformedRecord";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::IneligibleCampaign: return "IneligibleCampaign";
        case ErrorKind::MissingSeries: return "MissingSeries";
        case ErrorKind::InsufficientSample: return "InsufficientSample";
        case ErrorKind::PoolExhausted: return "PoolExhausted";
        case ErrorKind::UnfittablePeriod: return "UnfittablePeriod";
        case ErrorKind::EmptyDenominator: return "EmptyDenominator";
        case ErrorKind::MissingCounter: return "MissingCounter";
        case ErrorKind::DegenerateSample: return "DegenerateSample";
        case ErrorKind::SingularFit: return "SingularFit";
        case ErrorKind::TooFewRows: return "TooFewRows";
        case ErrorKind::EmptyEvalSet: return "EmptyEvalSet";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace campaignfx
