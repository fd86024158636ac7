#pragma once

#include <stdexcept>
#include <string>

namespace bip {

// Invalid configuration or invalid input file. CLI maps this to exit code 2.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values, divergence, failed residual checks. CLI exit code 3.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse (backward before forward, mismatched lengths).
struct usage_error : std::logic_error {
    explicit usage_error(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace bip
