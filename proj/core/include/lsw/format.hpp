#pragma once

#include <charconv>
#include <string>

namespace lsw {

/// Shortest round-trip decimal text for a double. Locale independent, so
/// output files are byte-stable across runs.
inline std::string format_number(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

}  // namespace lsw
