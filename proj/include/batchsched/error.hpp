#pragma once

#include <stdexcept>
#include <string>

namespace batchsched {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated an operation's precondition (masked action, stepping a
/// terminated episode, all-false mask, ...).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Structured text could not be parsed. `what()` carries the position.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Data parsed fine but violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Generator parameters describe a line that cannot run without idle time.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace batchsched
