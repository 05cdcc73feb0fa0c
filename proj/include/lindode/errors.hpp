#pragma once

#include <stdexcept>
#include <string>

namespace lindode {

/// Raised when caller-supplied data is malformed or out of contract
/// (non-square matrix, non-normalized state, unparsable problem file, ...).
/// The CLI maps this to exit code 1.
class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when an internal mathematical cross-check fails (pipeline output
/// disagrees with its independent reference, CPTP validation fails, an
/// iteration hits its cap, ...). The CLI maps this to exit code 2 and still
/// writes the report so the failure can be inspected.
class check_error : public std::runtime_error {
public:
    explicit check_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace lindode
