#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace campaignfx {

enum class ErrorKind {
    MalformedRecord,
    InsufficientData,
    IneligibleCampaign,
    MissingSeries,
    InsufficientSample,
    PoolExhausted,
    UnfittablePeriod,
    EmptyDenominator,
    MissingCounter,
    DegenerateSample,
    SingularFit,
    TooFewRows,
    EmptyEvalSet,
    InvalidConfig,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Thrown for contract violations that abort an operation.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// A non-fatal problem recorded while an operation keeps going
/// (skipped line, unmatched venue, dropped column, ...).
struct Issue {
    ErrorKind kind;
    std::string subject;
    std::string detail;
};

using IssueLog = std::vector<Issue>;

}  // namespace campaignfx
