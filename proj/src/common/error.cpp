#include "common/error.hpp"

namespace tidal {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Ok: return "Ok";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::FormatError: return "FormatError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::InitRefused: return "InitRefused";
        case ErrorCode::IncompatibleVersion: return "IncompatibleVersion";
        case ErrorCode::UnknownItem: return "UnknownItem";
        case ErrorCode::UnknownSession: return "UnknownSession";
        case ErrorCode::EmptyCandidates: return "EmptyCandidates";
        case ErrorCode::InvalidInterval: return "InvalidInterval";
        case ErrorCode::PlanTooShort: return "PlanTooShort";
        case ErrorCode::MissingKey: return "MissingKey";
        case ErrorCode::InvalidPatternTable: return "InvalidPatternTable";
        case ErrorCode::NonLoopbackBind: return "NonLoopbackBind";
        case ErrorCode::Network: return "Network";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace tidal
