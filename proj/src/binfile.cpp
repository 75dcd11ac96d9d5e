#include "binfile.hpp"

#include <filesystem>
#include <fstream>

#include "bytes.hpp"
#include "error.hpp"

namespace alch::binfile {

namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
    return in;
}

} // namespace

void write(const std::string& path, std::uint64_t rows, std::uint64_t cols,
           std::span<const double> row_major) {
    if (row_major.size() != rows * cols) {
        throw Error(ErrorCode::InvalidArgument, "binfile::write: data size differs from rows x cols");
    }
    std::vector<std::uint8_t> header;
    ByteWriter w(header);
    for (char c : {'A', 'L', 'C', 'H'}) w.put(static_cast<std::uint8_t>(c));
    w.put(kVersion);
    w.put(rows);
    w.put(cols);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot create '" + path + "'");
    out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
    std::vector<std::uint8_t> chunk;
    constexpr std::size_t kChunk = 1 << 16;
    for (std::size_t at = 0; at < row_major.size(); at += kChunk) {
        chunk.clear();
        ByteWriter(chunk).put_f64s(row_major.subspan(at, std::min(kChunk, row_major.size() - at)));
        out.write(reinterpret_cast<const char*>(chunk.data()), static_cast<std::streamsize>(chunk.size()));
    }
    if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

Header read_header(const std::string& path) {
    auto in = open_in(path);
    std::vector<std::uint8_t> raw(kHeaderSize);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(kHeaderSize)) {
        throw Error(ErrorCode::Io, "'" + path + "' is too short for a matrix file header");
    }
    if (raw[0] != 'A' || raw[1] != 'L' || raw[2] != 'C' || raw[3] != 'H') {
        throw Error(ErrorCode::Io, "'" + path + "' has no ALCH magic");
    }
    ByteReader r(std::span<const std::uint8_t>(raw).subspan(4));
    const auto version = r.get<std::uint16_t>();
    if (version != kVersion) {
        throw Error(ErrorCode::Io, "'" + path + "' has unsupported version " + std::to_string(version));
    }
    Header h;
    h.rows = r.get<std::uint64_t>();
    h.cols = r.get<std::uint64_t>();
    const auto size = std::filesystem::file_size(path);
    if (h.cols != 0 && h.rows > (size / 8) / h.cols) {
        throw Error(ErrorCode::Io, "'" + path + "' is shorter than its header claims");
    }
    if (size != kHeaderSize + 8 * h.rows * h.cols) {
        throw Error(ErrorCode::Io, "'" + path + "' size does not match 22 + 8*rows*cols");
    }
    return h;
}

std::vector<double> read_rows(const std::string& path, std::uint64_t row_start,
                              std::uint64_t row_count) {
    const Header h = read_header(path);
    if (row_start + row_count > h.rows) {
        throw Error(ErrorCode::InvalidArgument, "binfile::read_rows: range beyond file rows");
    }
    auto in = open_in(path);
    in.seekg(static_cast<std::streamoff>(kHeaderSize + row_start * h.cols * 8));
    std::vector<std::uint8_t> raw(row_count * h.cols * 8);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw Error(ErrorCode::Io, "short read from '" + path + "'");
    }
    std::vector<double> out(row_count * h.cols);
    ByteReader(raw).get_f64s(out);
    return out;
}

std::vector<double> read_all(const std::string& path, Header* header) {
    const Header h = read_header(path);
    if (header != nullptr) *header = h;
    return read_rows(path, 0, h.rows);
}

} // namespace alch::binfile
