#pragma once

#include <stdexcept>
#include <string>

namespace dmbpn {

// Error taxonomy used across the library. Every throw site picks the most
// specific kind so callers (and tests) can distinguish failure classes.

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct StateError : std::runtime_error {
    explicit StateError(const std::string& what) : std::runtime_error(what) {}
};

// Carries the 1-based line number of the offending input line.
struct ParseError : std::runtime_error {
    std::size_t line;
    ParseError(const std::string& what, std::size_t line_no)
        : std::runtime_error(what + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
};

struct SamplingError : std::runtime_error {
    explicit SamplingError(const std::string& what) : std::runtime_error(what) {}
};

struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

struct DeterminismError : std::runtime_error {
    explicit DeterminismError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dmbpn
