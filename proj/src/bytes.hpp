#pragma once

// Little-endian primitive codec used by the wire format and the matrix file format.

#include <bit>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "error.hpp"

namespace alch {

namespace detail {

template <typename U>
constexpr U to_little(U v) noexcept {
    if constexpr (std::endian::native == std::endian::little || sizeof(U) == 1) {
        return v;
    } else {
        U out = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            out = static_cast<U>((out << 8) | ((v >> (8 * i)) & 0xFF));
        }
        return out;
    }
}

template <typename T>
using uint_of = std::conditional_t<
    sizeof(T) == 1, std::uint8_t,
    std::conditional_t<sizeof(T) == 2, std::uint16_t,
                       std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;

} // namespace detail

class ByteWriter {
  public:
    explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    template <typename T>
        requires(std::is_arithmetic_v<T>)
    void put(T value) {
        using U = detail::uint_of<T>;
        const U bits = detail::to_little(std::bit_cast<U>(value));
        const auto old = out_.size();
        out_.resize(old + sizeof(U));
        std::memcpy(out_.data() + old, &bits, sizeof(U));
    }

    void put_f64s(std::span<const double> values) {
        if constexpr (std::endian::native == std::endian::little) {
            const auto old = out_.size();
            out_.resize(old + values.size_bytes());
            if (!values.empty()) {
                std::memcpy(out_.data() + old, values.data(), values.size_bytes());
            }
        } else {
            for (double v : values) put(v);
        }
    }

    /// Writes a u16 length prefix followed by the UTF-8 bytes.
    void put_string16(std::string_view s, const char* field) {
        if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw Error(ErrorCode::InvalidArgument,
                        std::string("field '") + field + "' exceeds u16 length");
        }
        put(static_cast<std::uint16_t>(s.size()));
        out_.insert(out_.end(), s.begin(), s.end());
    }

    std::size_t size() const noexcept { return out_.size(); }

  private:
    std::vector<std::uint8_t>& out_;
};

class ByteReader {
  public:
    explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

    template <typename T>
        requires(std::is_arithmetic_v<T>)
    T get() {
        using U = detail::uint_of<T>;
        need(sizeof(U));
        U bits;
        std::memcpy(&bits, in_.data() + pos_, sizeof(U));
        pos_ += sizeof(U);
        return std::bit_cast<T>(detail::to_little(bits));
    }

    void get_f64s(std::span<double> out) {
        need(out.size_bytes());
        if constexpr (std::endian::native == std::endian::little) {
            if (!out.empty()) std::memcpy(out.data(), in_.data() + pos_, out.size_bytes());
            pos_ += out.size_bytes();
        } else {
            for (double& v : out) v = get<double>();
        }
    }

    std::string get_string16() {
        const auto len = get<std::uint16_t>();
        need(len);
        std::string s(reinterpret_cast<const char*>(in_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    std::size_t remaining() const noexcept { return in_.size() - pos_; }
    std::size_t position() const noexcept { return pos_; }

  private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) {
            throw Error(ErrorCode::Protocol, "malformed body: truncated field");
        }
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

} // namespace alch
