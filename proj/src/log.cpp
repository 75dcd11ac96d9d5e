#include "log.hpp"

#include <spdlog/spdlog.h>

#include "error.hpp"

namespace alch {

void set_log_level(std::string_view level) {
    const auto parsed = spdlog::level::from_str(std::string(level));
    if (parsed == spdlog::level::off && level != "off") {
        throw Error(ErrorCode::InvalidArgument, "unknown log level '" + std::string(level) + "'");
    }
    spdlog::set_level(parsed);
}

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

} // namespace alch
