#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tidal {

// Keep in sync with tidal_status in include/tidal/tidal.h (same numeric order).
enum class ErrorCode {
    Ok = 0,
    InvalidArgument,
    ParseError,
    FormatError,
    IoError,
    InitRefused,
    IncompatibleVersion,
    UnknownItem,
    UnknownSession,
    EmptyCandidates,
    InvalidInterval,
    PlanTooShort,
    MissingKey,
    InvalidPatternTable,
    NonLoopbackBind,
    Network,
    Internal,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace tidal
