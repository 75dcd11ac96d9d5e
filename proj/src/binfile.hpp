#pragma once

// Dense matrix file:
//   bytes 0..3   magic "ALCH"
//   bytes 4..5   version u16 (1)
//   bytes 6..13  rows u64
//   bytes 14..21 cols u64
//   then rows*cols f64, row-major; all little-endian.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace alch::binfile {

inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::uint64_t kHeaderSize = 22;

struct Header {
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
};

void write(const std::string& path, std::uint64_t rows, std::uint64_t cols,
           std::span<const double> row_major);

/// Validates magic, version and file size.
Header read_header(const std::string& path);

std::vector<double> read_all(const std::string& path, Header* header = nullptr);

/// Rows [row_start, row_start + row_count) only.
std::vector<double> read_rows(const std::string& path, std::uint64_t row_start,
                              std::uint64_t row_count);

} // namespace alch::binfile
