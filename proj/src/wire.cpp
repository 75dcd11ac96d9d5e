#include "wire.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <string>

#include "bytes.hpp"

namespace alch::wire {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

// Frames above this are rejected as corrupt rather than buffered.
constexpr std::uint64_t kMaxPayload = std::uint64_t{1} << 36;

template <typename Limit, typename N>
Limit checked_count(N n, const char* field) {
    if (n > std::numeric_limits<Limit>::max()) {
        throw Error(ErrorCode::InvalidArgument,
                    std::string("field '") + field + "' exceeds its width");
    }
    return static_cast<Limit>(n);
}

void write_params(ByteWriter& w, const ParamMap& params) {
    w.put(checked_count<std::uint16_t>(params.size(), "param count"));
    for (const auto& [key, value] : params.entries()) {
        w.put_string16(key, "param key");
        w.put(static_cast<std::uint8_t>(value.index()));
        std::visit(overloaded{
                       [&](double v) { w.put(v); },
                       [&](std::int64_t v) { w.put(v); },
                       [&](const std::string& v) { w.put_string16(v, "param string"); },
                       [&](bool v) { w.put(static_cast<std::uint8_t>(v ? 1 : 0)); },
                       [&](MatrixRef v) { w.put(v.id); },
                   },
                   value);
    }
}

ParamMap read_params(ByteReader& r) {
    ParamMap params;
    std::set<std::string> seen;
    const auto count = r.get<std::uint16_t>();
    for (std::uint16_t i = 0; i < count; ++i) {
        std::string key = r.get_string16();
        if (!seen.insert(key).second) {
            throw Error(ErrorCode::Protocol, "malformed body: duplicate param key '" + key + "'");
        }
        const auto tag = r.get<std::uint8_t>();
        ParamValue value;
        switch (tag) {
        case 0: value = r.get<double>(); break;
        case 1: value = r.get<std::int64_t>(); break;
        case 2: value = r.get_string16(); break;
        case 3: {
            const auto b = r.get<std::uint8_t>();
            if (b > 1) throw Error(ErrorCode::Protocol, "malformed body: bool byte not 0/1");
            value = (b == 1);
            break;
        }
        case 4: value = MatrixRef{r.get<std::uint64_t>()}; break;
        default:
            throw Error(ErrorCode::Protocol,
                        "malformed body: unknown param tag " + std::to_string(tag));
        }
        params.set(std::move(key), std::move(value));
    }
    return params;
}

void write_matrix_info(ByteWriter& w, const MatrixInfo& m) {
    w.put(m.matrix_id);
    w.put(m.rows);
    w.put(m.cols);
    w.put(checked_count<std::uint16_t>(m.entries.size(), "entry_count"));
    for (const auto& e : m.entries) {
        w.put(e.worker_id);
        w.put(e.row_start);
        w.put(e.row_end);
    }
}

MatrixInfo read_matrix_info(ByteReader& r) {
    MatrixInfo m;
    m.matrix_id = r.get<std::uint64_t>();
    m.rows = r.get<std::uint64_t>();
    m.cols = r.get<std::uint64_t>();
    const auto count = r.get<std::uint16_t>();
    m.entries.reserve(count);
    for (std::uint16_t i = 0; i < count; ++i) {
        LayoutEntry e;
        e.worker_id = r.get<std::uint16_t>();
        e.row_start = r.get<std::uint64_t>();
        e.row_end = r.get<std::uint64_t>();
        m.entries.push_back(e);
    }
    return m;
}

void write_rows(ByteWriter& w, std::uint64_t matrix_id, const RowBatch& rows) {
    if (rows.values.size() != rows.indices.size() * rows.cols) {
        throw Error(ErrorCode::InvalidArgument, "row batch values do not match row_count x cols");
    }
    w.put(matrix_id);
    w.put(checked_count<std::uint32_t>(rows.size(), "row_count"));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        w.put(rows.indices[i]);
        w.put_f64s(rows.row(i));
    }
}

RowBatch read_rows(ByteReader& r, std::uint64_t& matrix_id) {
    matrix_id = r.get<std::uint64_t>();
    const auto count = r.get<std::uint32_t>();
    const std::size_t rest = r.remaining();
    RowBatch rows;
    if (count == 0) {
        if (rest != 0) throw Error(ErrorCode::Protocol, "malformed body: rows payload length");
        return rows;
    }
    if (rest % count != 0 || rest / count < 8 || (rest / count - 8) % 8 != 0) {
        throw Error(ErrorCode::Protocol, "malformed body: rows payload length");
    }
    rows.cols = (rest / count - 8) / 8;
    rows.indices.resize(count);
    rows.values.resize(static_cast<std::size_t>(count) * rows.cols);
    for (std::uint32_t i = 0; i < count; ++i) {
        rows.indices[i] = r.get<std::uint64_t>();
        r.get_f64s({rows.values.data() + i * rows.cols, static_cast<std::size_t>(rows.cols)});
    }
    return rows;
}

void put_header(std::vector<std::uint8_t>& out, MsgType type, std::uint32_t session_id,
                std::uint64_t payload_len) {
    ByteWriter w(out);
    w.put(static_cast<std::uint8_t>(type));
    w.put(session_id);
    w.put(payload_len);
}

void patch_length(std::vector<std::uint8_t>& out, std::size_t frame_start) {
    const std::uint64_t len = out.size() - frame_start - kHeaderSize;
    std::vector<std::uint8_t> tmp;
    ByteWriter(tmp).put(len);
    std::copy(tmp.begin(), tmp.end(), out.begin() + static_cast<std::ptrdiff_t>(frame_start + 5));
}

} // namespace

bool is_known_type(std::uint8_t code) noexcept {
    return (code >= 0x01 && code <= 0x10) || code == 0x7F;
}

MsgType type_of(const Message& message) noexcept {
    return std::visit(
        overloaded{
            [](const Handshake&) { return MsgType::Handshake; },
            [](const HandshakeAck&) { return MsgType::HandshakeAck; },
            [](const RegisterLibrary&) { return MsgType::RegisterLibrary; },
            [](const LibraryAck&) { return MsgType::LibraryAck; },
            [](const CreateMatrix&) { return MsgType::CreateMatrix; },
            [](const MatrixInfo&) { return MsgType::MatrixInfo; },
            [](const SendRows&) { return MsgType::SendRows; },
            [](const RowsAck&) { return MsgType::RowsAck; },
            [](const SendComplete&) { return MsgType::SendComplete; },
            [](const MatrixReady&) { return MsgType::MatrixReady; },
            [](const RunTask&) { return MsgType::RunTask; },
            [](const TaskResult&) { return MsgType::TaskResult; },
            [](const FetchRows&) { return MsgType::FetchRows; },
            [](const RowsData&) { return MsgType::RowsData; },
            [](const ReleaseMatrix&) { return MsgType::ReleaseMatrix; },
            [](const CloseSession&) { return MsgType::CloseSession; },
            [](const ErrorMsg&) { return MsgType::Error; },
        },
        message);
}

const char* type_name(MsgType type) noexcept {
    switch (type) {
    case MsgType::Handshake: return "HANDSHAKE";
    case MsgType::HandshakeAck: return "HANDSHAKE_ACK";
    case MsgType::RegisterLibrary: return "REGISTER_LIBRARY";
    case MsgType::LibraryAck: return "LIBRARY_ACK";
    case MsgType::CreateMatrix: return "CREATE_MATRIX";
    case MsgType::MatrixInfo: return "MATRIX_INFO";
    case MsgType::SendRows: return "SEND_ROWS";
    case MsgType::RowsAck: return "ROWS_ACK";
    case MsgType::SendComplete: return "SEND_COMPLETE";
    case MsgType::MatrixReady: return "MATRIX_READY";
    case MsgType::RunTask: return "RUN_TASK";
    case MsgType::TaskResult: return "TASK_RESULT";
    case MsgType::FetchRows: return "FETCH_ROWS";
    case MsgType::RowsData: return "ROWS_DATA";
    case MsgType::ReleaseMatrix: return "RELEASE_MATRIX";
    case MsgType::CloseSession: return "CLOSE_SESSION";
    case MsgType::Error: return "ERROR";
    }
    return "?";
}

void write_payload(std::vector<std::uint8_t>& out, const Message& message) {
    ByteWriter w(out);
    std::visit(
        overloaded{
            [&](const Handshake& m) {
                w.put(m.protocol_version);
                w.put(m.requested_workers);
            },
            [&](const HandshakeAck& m) {
                w.put(m.session_id);
                w.put(checked_count<std::uint16_t>(m.workers.size(), "worker_count"));
                for (const auto& e : m.workers) {
                    w.put(e.worker_id);
                    w.put_string16(e.address, "addr");
                }
            },
            [&](const RegisterLibrary& m) {
                w.put_string16(m.name, "name");
                w.put_string16(m.path, "path");
            },
            [&](const LibraryAck& m) { w.put(m.lib_id); },
            [&](const CreateMatrix& m) {
                w.put(m.rows);
                w.put(m.cols);
            },
            [&](const MatrixInfo& m) { write_matrix_info(w, m); },
            [&](const SendRows& m) { write_rows(w, m.matrix_id, m.rows); },
            [&](const RowsAck& m) {
                w.put(m.matrix_id);
                w.put(m.rows_received);
            },
            [&](const SendComplete& m) { w.put(m.matrix_id); },
            [&](const MatrixReady& m) { w.put(m.matrix_id); },
            [&](const RunTask& m) {
                w.put(m.lib_id);
                w.put_string16(m.routine, "routine");
                w.put(checked_count<std::uint8_t>(m.inputs.size(), "input_count"));
                for (auto id : m.inputs) w.put(id);
                write_params(w, m.params);
            },
            [&](const TaskResult& m) {
                w.put(m.status);
                w.put(checked_count<std::uint8_t>(m.outputs.size(), "output_count"));
                for (const auto& o : m.outputs) write_matrix_info(w, o);
                write_params(w, m.scalars);
            },
            [&](const FetchRows& m) {
                w.put(m.matrix_id);
                w.put(m.row_start);
                w.put(m.row_count);
            },
            [&](const RowsData& m) { write_rows(w, m.matrix_id, m.rows); },
            [&](const ReleaseMatrix& m) { w.put(m.matrix_id); },
            [&](const CloseSession&) {},
            [&](const ErrorMsg& m) {
                w.put(m.code);
                w.put_string16(m.message, "message");
            },
        },
        message);
}

Message read_payload(MsgType type, std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    Message out;
    switch (type) {
    case MsgType::Handshake: {
        Handshake m;
        m.protocol_version = r.get<std::uint16_t>();
        m.requested_workers = r.get<std::uint16_t>();
        out = m;
        break;
    }
    case MsgType::HandshakeAck: {
        HandshakeAck m;
        m.session_id = r.get<std::uint32_t>();
        const auto count = r.get<std::uint16_t>();
        for (std::uint16_t i = 0; i < count; ++i) {
            WorkerEndpoint e;
            e.worker_id = r.get<std::uint16_t>();
            e.address = r.get_string16();
            m.workers.push_back(std::move(e));
        }
        out = std::move(m);
        break;
    }
    case MsgType::RegisterLibrary: {
        RegisterLibrary m;
        m.name = r.get_string16();
        m.path = r.get_string16();
        out = std::move(m);
        break;
    }
    case MsgType::LibraryAck: out = LibraryAck{r.get<std::uint16_t>()}; break;
    case MsgType::CreateMatrix: {
        CreateMatrix m;
        m.rows = r.get<std::uint64_t>();
        m.cols = r.get<std::uint64_t>();
        out = m;
        break;
    }
    case MsgType::MatrixInfo: out = read_matrix_info(r); break;
    case MsgType::SendRows: {
        SendRows m;
        m.rows = read_rows(r, m.matrix_id);
        out = std::move(m);
        break;
    }
    case MsgType::RowsAck: {
        RowsAck m;
        m.matrix_id = r.get<std::uint64_t>();
        m.rows_received = r.get<std::uint32_t>();
        out = m;
        break;
    }
    case MsgType::SendComplete: out = SendComplete{r.get<std::uint64_t>()}; break;
    case MsgType::MatrixReady: out = MatrixReady{r.get<std::uint64_t>()}; break;
    case MsgType::RunTask: {
        RunTask m;
        m.lib_id = r.get<std::uint16_t>();
        m.routine = r.get_string16();
        const auto count = r.get<std::uint8_t>();
        for (std::uint8_t i = 0; i < count; ++i) m.inputs.push_back(r.get<std::uint64_t>());
        m.params = read_params(r);
        out = std::move(m);
        break;
    }
    case MsgType::TaskResult: {
        TaskResult m;
        m.status = r.get<std::uint8_t>();
        const auto count = r.get<std::uint8_t>();
        for (std::uint8_t i = 0; i < count; ++i) m.outputs.push_back(read_matrix_info(r));
        m.scalars = read_params(r);
        out = std::move(m);
        break;
    }
    case MsgType::FetchRows: {
        FetchRows m;
        m.matrix_id = r.get<std::uint64_t>();
        m.row_start = r.get<std::uint64_t>();
        m.row_count = r.get<std::uint32_t>();
        out = m;
        break;
    }
    case MsgType::RowsData: {
        RowsData m;
        m.rows = read_rows(r, m.matrix_id);
        out = std::move(m);
        break;
    }
    case MsgType::ReleaseMatrix: out = ReleaseMatrix{r.get<std::uint64_t>()}; break;
    case MsgType::CloseSession: out = CloseSession{}; break;
    case MsgType::Error: {
        ErrorMsg m;
        m.code = r.get<std::uint16_t>();
        m.message = r.get_string16();
        out = std::move(m);
        break;
    }
    default:
        throw Error(ErrorCode::Protocol, "unknown msg_type");
    }
    if (r.remaining() != 0) {
        throw Error(ErrorCode::Protocol, std::string("malformed body: trailing bytes in ") +
                                             type_name(type));
    }
    return out;
}

void encode_into(std::vector<std::uint8_t>& out, const Message& message,
                 std::uint32_t session_id) {
    const std::size_t start = out.size();
    put_header(out, type_of(message), session_id, 0);
    try {
        write_payload(out, message);
    } catch (...) {
        out.resize(start);
        throw;
    }
    patch_length(out, start);
}

std::vector<std::uint8_t> encode(const Message& message, std::uint32_t session_id) {
    std::vector<std::uint8_t> out;
    encode_into(out, message, session_id);
    return out;
}

void encode_rows_into(std::vector<std::uint8_t>& out, MsgType type, std::uint32_t session_id,
                      std::uint64_t matrix_id, std::uint64_t cols,
                      std::span<const std::uint64_t> indices,
                      const std::function<const double*(std::size_t)>& row_at) {
    if (type != MsgType::SendRows && type != MsgType::RowsData) {
        throw Error(ErrorCode::InvalidArgument, "encode_rows_into: not a rows message type");
    }
    const std::size_t start = out.size();
    const std::uint64_t payload = 12 + indices.size() * (8 + 8 * cols);
    out.reserve(start + kHeaderSize + payload);
    put_header(out, type, session_id, payload);
    ByteWriter w(out);
    w.put(matrix_id);
    w.put(checked_count<std::uint32_t>(indices.size(), "row_count"));
    for (std::size_t i = 0; i < indices.size(); ++i) {
        w.put(indices[i]);
        w.put_f64s({row_at(i), static_cast<std::size_t>(cols)});
    }
}

std::optional<Decoded> decode(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) return std::nullopt;
    if (!is_known_type(bytes[0])) {
        throw Error(ErrorCode::Protocol, "unknown msg_type 0x" + [&] {
            static const char* hex = "0123456789ABCDEF";
            return std::string{hex[bytes[0] >> 4], hex[bytes[0] & 0xF]};
        }());
    }
    if (bytes.size() < kHeaderSize) return std::nullopt;
    ByteReader header(bytes.first(kHeaderSize));
    const auto type = static_cast<MsgType>(header.get<std::uint8_t>());
    const auto session_id = header.get<std::uint32_t>();
    const auto payload_len = header.get<std::uint64_t>();
    if (payload_len > kMaxPayload) {
        throw Error(ErrorCode::Protocol, "payload_len exceeds limit");
    }
    if (bytes.size() - kHeaderSize < payload_len) return std::nullopt;
    const auto payload = bytes.subspan(kHeaderSize, static_cast<std::size_t>(payload_len));
    return Decoded{read_payload(type, payload), session_id,
                   kHeaderSize + static_cast<std::size_t>(payload_len)};
}

void FrameBuffer::feed(std::span<const std::uint8_t> bytes) {
    if (begin_ > 0 && begin_ >= buf_.size() / 2) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(begin_));
        begin_ = 0;
    }
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Decoded> FrameBuffer::next() {
    auto d = decode(std::span<const std::uint8_t>(buf_).subspan(begin_));
    if (!d) return std::nullopt;
    begin_ += d->consumed;
    if (begin_ == buf_.size()) {
        buf_.clear();
        begin_ = 0;
    }
    return d;
}

FrameStream::FrameStream(ReadFn read, std::size_t chunk) : read_(std::move(read)), chunk_(chunk) {}

std::optional<Decoded> FrameStream::next() {
    for (;;) {
        if (auto d = buffer_.next()) return d;
        if (closed_) return std::nullopt;
        const std::size_t n = read_(chunk_);
        if (n == 0) {
            closed_ = true;
            if (buffer_.has_partial()) {
                throw Error(ErrorCode::Connection, "stream closed mid-frame");
            }
            return std::nullopt;
        }
        buffer_.feed(std::span<const std::uint8_t>(chunk_).first(n));
    }
}

} // namespace alch::wire
