#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace alch {

/// Error codes shared by the wire protocol (ERROR frames) and the C API.
/// Codes below 100 travel on the wire; 100 and above are client-local.
enum class ErrorCode : std::uint16_t {
    VersionMismatch = 1,
    InsufficientWorkers = 2,
    ResourceExhausted = 3,
    IncompleteMatrix = 4,
    UnknownRoutine = 5,
    SchemaViolation = 6,
    NumericalFailure = 7,
    UnknownMatrix = 8,
    InvalidRequest = 9,
    UnknownLibrary = 10,
    RowOutOfRange = 11,
    DuplicateRow = 12,
    WidthMismatch = 13,
    Protocol = 14,
    Internal = 15,

    Connection = 100,
    InvalidArgument = 101,
    InvalidHandle = 102,
    Io = 103,
    NotFound = 104,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

} // namespace alch
