#include "error.hpp"

namespace alch {

const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::VersionMismatch: return "version mismatch";
    case ErrorCode::InsufficientWorkers: return "insufficient workers";
    case ErrorCode::ResourceExhausted: return "resource exhausted";
    case ErrorCode::IncompleteMatrix: return "incomplete matrix";
    case ErrorCode::UnknownRoutine: return "unknown routine";
    case ErrorCode::SchemaViolation: return "schema violation";
    case ErrorCode::NumericalFailure: return "numerical failure";
    case ErrorCode::UnknownMatrix: return "unknown matrix";
    case ErrorCode::InvalidRequest: return "invalid request";
    case ErrorCode::UnknownLibrary: return "unknown library";
    case ErrorCode::RowOutOfRange: return "row out of range";
    case ErrorCode::DuplicateRow: return "duplicate row";
    case ErrorCode::WidthMismatch: return "width mismatch";
    case ErrorCode::Protocol: return "protocol error";
    case ErrorCode::Internal: return "internal error";
    case ErrorCode::Connection: return "connection error";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::InvalidHandle: return "invalid handle";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::NotFound: return "not found";
    }
    return "unknown error";
}

} // namespace alch
