#pragma once

// Random well-formed wire messages for property tests.

#include <bit>
#include <cmath>
#include <random>
#include <string>

#include "wire.hpp"

namespace alch::testing {

class MessageGen {
  public:
    explicit MessageGen(std::uint64_t seed, bool allow_nan = false) : rng_(seed), allow_nan_(allow_nan) {}

    std::mt19937_64& rng() { return rng_; }

    std::uint64_t u(std::uint64_t lo, std::uint64_t hi) {
        return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng_);
    }

    // Any bit pattern, weighted towards awkward values.
    double f64() {
        switch (u(0, 7)) {
        case 0: return 0.0;
        case 1: return -0.0;
        case 2: return std::bit_cast<double>(u(1, (std::uint64_t{1} << 52) - 1)); // subnormal
        case 3: return u(0, 1) ? INFINITY : -INFINITY;
        case 4: return std::normal_distribution<double>(0.0, 1e3)(rng_);
        default: {
            for (;;) {
                const double d = std::bit_cast<double>(rng_());
                if (allow_nan_ || !std::isnan(d)) return d;
            }
        }
        }
    }

    std::string text(std::size_t max_len = 24) {
        std::string s(u(0, max_len), ' ');
        for (auto& c : s) c = static_cast<char>(u(0x20, 0x7e));
        return s;
    }

    ParamMap params() {
        ParamMap m;
        const auto n = u(0, 6);
        for (std::uint64_t i = 0; i < n; ++i) {
            std::string key = text(12) + "#" + std::to_string(i);
            switch (u(0, 4)) {
            case 0: m.set(key, f64()); break;
            case 1: m.set(key, static_cast<std::int64_t>(rng_())); break;
            case 2: m.set(key, text()); break;
            case 3: m.set(key, u(0, 1) == 1); break;
            default: m.set(key, MatrixRef{rng_()}); break;
            }
        }
        return m;
    }

    RowBatch rows() {
        RowBatch b;
        const auto n = u(0, 6);
        b.cols = n == 0 ? 0 : u(0, 9);
        for (std::uint64_t i = 0; i < n; ++i) {
            b.indices.push_back(rng_());
            for (std::uint64_t c = 0; c < b.cols; ++c) b.values.push_back(f64());
        }
        return b;
    }

    wire::MatrixInfo info() {
        wire::MatrixInfo m{rng_(), u(0, 1 << 20), u(0, 1 << 12), {}};
        const auto n = u(0, 8);
        for (std::uint64_t i = 0; i < n; ++i) {
            m.entries.push_back({static_cast<std::uint16_t>(u(0, 65535)), rng_(), rng_()});
        }
        return m;
    }

    wire::Message message() {
        using namespace wire;
        switch (u(0, 16)) {
        case 0: return Handshake{static_cast<std::uint16_t>(u(0, 65535)), static_cast<std::uint16_t>(u(0, 65535))};
        case 1: {
            HandshakeAck a{static_cast<std::uint32_t>(rng_()), {}};
            const auto n = u(0, 8);
            for (std::uint64_t i = 0; i < n; ++i) a.workers.push_back({static_cast<std::uint16_t>(u(0, 65535)), text()});
            return a;
        }
        case 2: return RegisterLibrary{text(), text()};
        case 3: return LibraryAck{static_cast<std::uint16_t>(u(0, 65535))};
        case 4: return CreateMatrix{rng_(), rng_()};
        case 5: return info();
        case 6: return SendRows{rng_(), rows()};
        case 7: return RowsAck{rng_(), static_cast<std::uint32_t>(rng_())};
        case 8: return SendComplete{rng_()};
        case 9: return MatrixReady{rng_()};
        case 10: {
            RunTask t{static_cast<std::uint16_t>(u(0, 65535)), text(), {}, params()};
            const auto n = u(0, 5);
            for (std::uint64_t i = 0; i < n; ++i) t.inputs.push_back(rng_());
            return t;
        }
        case 11: {
            TaskResult r{static_cast<std::uint8_t>(u(0, 255)), {}, params()};
            const auto n = u(0, 3);
            for (std::uint64_t i = 0; i < n; ++i) r.outputs.push_back(info());
            return r;
        }
        case 12: return FetchRows{rng_(), rng_(), static_cast<std::uint32_t>(rng_())};
        case 13: return RowsData{rng_(), rows()};
        case 14: return ReleaseMatrix{rng_()};
        case 15: return CloseSession{};
        default: return ErrorMsg{static_cast<std::uint16_t>(u(0, 65535)), text(80)};
        }
    }

  private:
    std::mt19937_64 rng_;
    bool allow_nan_;
};

} // namespace alch::testing
