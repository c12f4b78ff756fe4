#pragma once

#include <stdexcept>
#include <string>

namespace sigmmd {

// Bad arguments or malformed configuration. CLI maps this to exit code 2.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape mismatches, empty inputs, out-of-range indices. Exit code 2.
struct invalid_input : std::runtime_error {
    explicit invalid_input(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN/Inf encountered, failed convergence, loss of numeric validity. Exit code 3.
struct numeric_fault : std::runtime_error {
    explicit numeric_fault(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable, unparsable or inconsistent data files. Exit code 4.
struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sigmmd
