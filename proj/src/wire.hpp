#pragma once

// Binary message format spoken between clients, the driver and the workers.
//
// Frame = 13-byte header + payload:
//   u8  msg_type
//   u32 session_id
//   u64 payload_len
// All integers and floats are little-endian; floats are IEEE 754 binary64.
// docs/protocol.md documents every body layout byte by byte.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "params.hpp"
#include "rows.hpp"

namespace alch::wire {

inline constexpr std::uint16_t kProtocolVersion = 1;
inline constexpr std::size_t kHeaderSize = 13;

enum class MsgType : std::uint8_t {
    Handshake = 0x01,
    HandshakeAck = 0x02,
    RegisterLibrary = 0x03,
    LibraryAck = 0x04,
    CreateMatrix = 0x05,
    MatrixInfo = 0x06,
    SendRows = 0x07,
    RowsAck = 0x08,
    SendComplete = 0x09,
    MatrixReady = 0x0A,
    RunTask = 0x0B,
    TaskResult = 0x0C,
    FetchRows = 0x0D,
    RowsData = 0x0E,
    ReleaseMatrix = 0x0F,
    CloseSession = 0x10,
    Error = 0x7F,
};

bool is_known_type(std::uint8_t code) noexcept;

struct Handshake {
    std::uint16_t protocol_version = kProtocolVersion;
    std::uint16_t requested_workers = 0;
    bool operator==(const Handshake&) const = default;
};

struct WorkerEndpoint {
    std::uint16_t worker_id = 0;
    std::string address; // "host:port"
    bool operator==(const WorkerEndpoint&) const = default;
};

struct HandshakeAck {
    std::uint32_t session_id = 0;
    std::vector<WorkerEndpoint> workers;
    bool operator==(const HandshakeAck&) const = default;
};

struct RegisterLibrary {
    std::string name;
    std::string path;
    bool operator==(const RegisterLibrary&) const = default;
};

struct LibraryAck {
    std::uint16_t lib_id = 0;
    bool operator==(const LibraryAck&) const = default;
};

struct CreateMatrix {
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    bool operator==(const CreateMatrix&) const = default;
};

struct LayoutEntry {
    std::uint16_t worker_id = 0;
    std::uint64_t row_start = 0;
    std::uint64_t row_end = 0; // exclusive
    bool operator==(const LayoutEntry&) const = default;
};

struct MatrixInfo {
    std::uint64_t matrix_id = 0;
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::vector<LayoutEntry> entries;
    bool operator==(const MatrixInfo&) const = default;
};

/// Body shared by SEND_ROWS and ROWS_DATA. The column count is not on the
/// wire; decode infers it from payload_len and row_count (0 when row_count is 0).
struct SendRows {
    std::uint64_t matrix_id = 0;
    RowBatch rows;
    bool operator==(const SendRows&) const = default;
};

struct RowsData {
    std::uint64_t matrix_id = 0;
    RowBatch rows;
    bool operator==(const RowsData&) const = default;
};

struct RowsAck {
    std::uint64_t matrix_id = 0;
    std::uint32_t rows_received = 0;
    bool operator==(const RowsAck&) const = default;
};

struct SendComplete {
    std::uint64_t matrix_id = 0;
    bool operator==(const SendComplete&) const = default;
};

struct MatrixReady {
    std::uint64_t matrix_id = 0;
    bool operator==(const MatrixReady&) const = default;
};

struct RunTask {
    std::uint16_t lib_id = 0;
    std::string routine;
    std::vector<std::uint64_t> inputs;
    ParamMap params;
    bool operator==(const RunTask&) const = default;
};

struct TaskResult {
    std::uint8_t status = 0;
    std::vector<MatrixInfo> outputs;
    ParamMap scalars;
    bool operator==(const TaskResult&) const = default;
};

struct FetchRows {
    std::uint64_t matrix_id = 0;
    std::uint64_t row_start = 0;
    std::uint32_t row_count = 0;
    bool operator==(const FetchRows&) const = default;
};

struct ReleaseMatrix {
    std::uint64_t matrix_id = 0;
    bool operator==(const ReleaseMatrix&) const = default;
};

struct CloseSession {
    bool operator==(const CloseSession&) const = default;
};

struct ErrorMsg {
    std::uint16_t code = 0;
    std::string message;
    bool operator==(const ErrorMsg&) const = default;
};

using Message = std::variant<Handshake, HandshakeAck, RegisterLibrary, LibraryAck, CreateMatrix,
                             MatrixInfo, SendRows, RowsAck, SendComplete, MatrixReady, RunTask,
                             TaskResult, FetchRows, RowsData, ReleaseMatrix, CloseSession, ErrorMsg>;

MsgType type_of(const Message& message) noexcept;
const char* type_name(MsgType type) noexcept;

/// Serializes one frame. Throws Error(InvalidArgument) when a field exceeds its width.
std::vector<std::uint8_t> encode(const Message& message, std::uint32_t session_id);

/// Appends one frame to `out` (avoids a temporary for large row frames).
void encode_into(std::vector<std::uint8_t>& out, const Message& message, std::uint32_t session_id);

/// Encodes a SEND_ROWS / ROWS_DATA frame straight from caller-owned rows,
/// without building a RowBatch first. `row_at(i)` must return `cols` values.
void encode_rows_into(std::vector<std::uint8_t>& out, MsgType type, std::uint32_t session_id,
                      std::uint64_t matrix_id, std::uint64_t cols,
                      std::span<const std::uint64_t> indices,
                      const std::function<const double*(std::size_t)>& row_at);

struct Decoded {
    Message message;
    std::uint32_t session_id = 0;
    std::size_t consumed = 0;
};

/// Decodes the first frame in `bytes`. Returns nullopt when the buffer does not
/// yet hold a full frame (nothing consumed). Throws Error(Protocol) for unknown
/// types and malformed bodies.
std::optional<Decoded> decode(std::span<const std::uint8_t> bytes);

void write_payload(std::vector<std::uint8_t>& out, const Message& message);
Message read_payload(MsgType type, std::span<const std::uint8_t> payload);

/// Reassembles frames from arbitrarily segmented input. One per connection.
class FrameBuffer {
  public:
    void feed(std::span<const std::uint8_t> bytes);
    /// Next complete frame, if buffered.
    std::optional<Decoded> next();
    /// True when a partial frame is buffered.
    bool has_partial() const noexcept { return begin_ < buf_.size(); }

  private:
    std::vector<std::uint8_t> buf_;
    std::size_t begin_ = 0;
};

/// Byte source for FrameStream; returns 0 on orderly end of stream.
using ReadFn = std::function<std::size_t(std::span<std::uint8_t>)>;

/// Yields each complete frame of a byte stream exactly once, in order.
/// `next()` returns nullopt on a clean close at a frame boundary and throws
/// Error(Connection) when the stream ends inside a frame.
class FrameStream {
  public:
    explicit FrameStream(ReadFn read, std::size_t chunk = 1 << 16);
    std::optional<Decoded> next();

  private:
    ReadFn read_;
    FrameBuffer buffer_;
    std::vector<std::uint8_t> chunk_;
    bool closed_ = false;
};

} // namespace alch::wire
