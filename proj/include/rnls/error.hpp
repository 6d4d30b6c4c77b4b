#pragma once

#include <stdexcept>
#include <string>

namespace rnls {

/// Invalid input: configuration keys, parameter ranges, grid shapes.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation could not produce a trustworthy result
/// (non-convergence, lost resolution, invalid field).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File system or format failures in checkpoints and outputs.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rnls
