#pragma once

#include <stdexcept>
#include <string>

namespace raglex {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad or missing configuration (flags, config files, parameter ranges).
struct ConfigError : Error {
    using Error::Error;
};

/// Index or corpus construction failed (invariant violation, empty input).
struct BuildError : Error {
    using Error::Error;
};

/// Filesystem or serialization failure.
struct IoError : Error {
    using Error::Error;
};

/// Remote provider (embedding endpoint, LLM endpoint) failure after retries.
/// Callers may retry the whole operation.
struct ProviderError : Error {
    using Error::Error;
};

} // namespace raglex
