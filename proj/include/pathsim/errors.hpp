#pragma once

#include <stdexcept>
#include <string>

namespace pathsim {

// Bad user input: malformed config, inconsistent options, unknown preset.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Base for failures of a numerical contract at run time.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A series, bound or density violated the property the algorithm relies on.
class ContractViolation : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Retrospective bracketing stalled before the uniform could be resolved.
class PrecisionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Optional attempt cap was reached.
class AttemptLimitError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace pathsim
