#ifndef VITRIEVER_ERROR_HPP
#define VITRIEVER_ERROR_HPP

#include <stdexcept>
#include <string>

/**
 * @file error.hpp
 *
 * @brief Exception type shared by every module.
 */

namespace vitriever {

/**
 * @brief Machine-checkable classification of a failure.
 */
enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    NonFinite,
    DuplicateId,
    CountMismatch,
    BadMagic,
    UnsupportedVersion,
    UnsupportedValueType,
    Truncated,
    TrailingData,
    Io,
    Parse,
    DegenerateInput,
    GroundTruth,
    MissingRanking,
    DuplicateRanking,
    InsufficientDepth
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid argument";
        case ErrorCode::DimensionMismatch: return "dimension mismatch";
        case ErrorCode::NonFinite: return "non-finite value";
        case ErrorCode::DuplicateId: return "duplicate id";
        case ErrorCode::CountMismatch: return "count mismatch";
        case ErrorCode::BadMagic: return "bad magic";
        case ErrorCode::UnsupportedVersion: return "unsupported version";
        case ErrorCode::UnsupportedValueType: return "unsupported value type";
        case ErrorCode::Truncated: return "truncated file";
        case ErrorCode::TrailingData: return "trailing data";
        case ErrorCode::Io: return "I/O failure";
        case ErrorCode::Parse: return "parse error";
        case ErrorCode::DegenerateInput: return "degenerate input";
        case ErrorCode::GroundTruth: return "ground truth error";
        case ErrorCode::MissingRanking: return "missing ranking";
        case ErrorCode::DuplicateRanking: return "duplicate ranking";
        case ErrorCode::InsufficientDepth: return "insufficient ranking depth";
    }
    return "unknown error";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}

#endif
