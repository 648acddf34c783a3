#pragma once

#include <charconv>
#include <string>

namespace cohash::io {

/// Shortest round-trip decimal form of v; locale-independent and
/// deterministic, so text reports and logs are byte-reproducible.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace cohash::io
