#pragma once

#include <stdexcept>
#include <string>

namespace sanodep {

// Shape disagreement between operands.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Caller violated a documented precondition (empty set, bad range, ...).
struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Object used in the wrong lifecycle state (e.g. backward before forward).
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

// A numerical evaluation produced a non-finite value where one is not allowed.
struct EvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid experiment configuration or config file.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or incompatible checkpoint / dataset file.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Writes a one-line warning to stderr. Kept as a single hook so tests can
// silence it.
void log_warning(const std::string& message);
void set_warnings_enabled(bool enabled);

}  // namespace sanodep
