#pragma once

#include <stdexcept>
#include <string>

namespace wg {

// Domain/parameter misuse (bad scale, even kernel width, empty bank, ...).
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Tensor rank/dimension mismatch. Never silently broadcast.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Non-finite values, indefinite matrices, diverged losses.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed file contents; message carries the byte offset.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad key/value in a config file or on the command line.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation called out of order (backward before forward, ...).
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

// I/O failure; message carries the path.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace wg
