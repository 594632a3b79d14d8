#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace dayahead {

/// Raised for malformed or inconsistent input data (files, configs).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when a numerical routine cannot proceed (degenerate or unstable input).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
    std::ostringstream oss;
    (oss << ... << args);
    return oss.str();
}

}  // namespace detail

}  // namespace dayahead
