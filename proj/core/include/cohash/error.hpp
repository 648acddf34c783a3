#pragma once

#include <stdexcept>
#include <string>

namespace cohash {

/// Single exception type for the whole library; messages are prefixed with
/// the failing area ("cmf:", "gc:", "net:", ...) so callers can tell load
/// errors apart without a type hierarchy.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cohash
