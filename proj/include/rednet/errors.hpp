#pragma once

#include <stdexcept>
#include <string>

namespace rednet {

// Base for everything the toolkit throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor or parameter shapes disagree.
struct ShapeError : Error {
    using Error::Error;
};

// Layer geometry collapses (an output dimension would be < 1).
struct GeometryError : Error {
    using Error::Error;
};

// Invalid architecture / run configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Serialized container (checkpoint, config JSON) violates its format.
struct FormatError : Error {
    using Error::Error;
};

// Dataset-level problems: missing images, images too small, empty sets.
struct DataError : Error {
    using Error::Error;
};

// Filesystem and codec failures.
struct IoError : Error {
    using Error::Error;
};

}  // namespace rednet
