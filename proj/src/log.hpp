#pragma once

#include <string>
#include <string_view>

namespace alch {

/// "trace", "debug", "info", "warn", "error", "off". Throws Error(InvalidArgument).
void set_log_level(std::string_view level);

/// Shortest text that round-trips the double exactly.
std::string format_double(double v);

} // namespace alch
