#pragma once

#include <stdexcept>
#include <string>

namespace covshrink {

// Every failure the library can raise, by cause.  Callers that need to react
// programmatically (the CLI, cross-validation loops) switch on the code; the
// message carries the offending values.
enum class ErrorCode {
    NonFinite,            // NaN or infinity where a finite value is required
    DimensionMismatch,    // incompatible orders / lengths
    DomainError,          // argument outside the divergence or function domain
    NoConvergence,        // iteration budget exhausted
    BracketFailure,       // root bracket could not be established
    RadiusNonPositive,    // ball radius must be > 0
    RadiusTooLarge,       // radius >= largest feasible divergence from the nominal
    SingularNominal,      // divergence needs a positive definite nominal
    BadConfidence,        // confidence level outside (0, 1)
    EmptyGrid,            // candidate grid has no entries
    InsufficientData,     // too few samples for the requested statistic
    InsufficientHistory,  // return history shorter than one fitting window
    DegenerateClass,      // class with < 2 samples, or < 2 classes overall
    BadAlpha,             // shrinkage weight outside [0, 1]
    SingularEstimator,    // estimator not invertible where an inverse is required
    MalformedInput,       // unparseable or inconsistent input data
    MalformedHeader,      // input file header missing or wrong
    BadConfig,            // unknown or ill-typed configuration key
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::BracketFailure: return "BracketFailure";
        case ErrorCode::RadiusNonPositive: return "RadiusNonPositive";
        case ErrorCode::RadiusTooLarge: return "RadiusTooLarge";
        case ErrorCode::SingularNominal: return "SingularNominal";
        case ErrorCode::BadConfidence: return "BadConfidence";
        case ErrorCode::EmptyGrid: return "EmptyGrid";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::InsufficientHistory: return "InsufficientHistory";
        case ErrorCode::DegenerateClass: return "DegenerateClass";
        case ErrorCode::BadAlpha: return "BadAlpha";
        case ErrorCode::SingularEstimator: return "SingularEstimator";
        case ErrorCode::MalformedInput: return "MalformedInput";
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::BadConfig: return "BadConfig";
    }
    return "Unknown";
}

// Iteration failures are reported differently from bad inputs (the CLI exits
// 3 instead of 2), so the distinction lives next to the codes.
inline bool is_numerical_failure(ErrorCode c) {
    return c == ErrorCode::NoConvergence || c == ErrorCode::BracketFailure;
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + detail),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    const char* code_name() const noexcept { return error_code_name(code_); }

  private:
    ErrorCode code_;
};

}  // namespace covshrink
