#pragma once

#include <stdexcept>
#include <string>

namespace fovea {

/// Broad failure category; the CLI maps each to an exit code.
enum class ErrorCategory { Usage = 1, Data = 2, Invariant = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}
    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error(ErrorCategory::Usage, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

class InvariantViolation : public Error {
public:
    explicit InvariantViolation(const std::string& what) : Error(ErrorCategory::Invariant, what) {}
};

// core
class MalformedScene : public DataError {
    using DataError::DataError;
};

// prototypes
class EmptySupportRegion : public DataError {
    using DataError::DataError;
};
class EmptyBackground : public DataError {
    using DataError::DataError;
};
class CorruptRepository : public DataError {
    using DataError::DataError;
};
class VersionMismatch : public DataError {
    using DataError::DataError;
};
class MissingEntries : public DataError {
    using DataError::DataError;
};

// enhance / toyenc
class MissingPrototype : public DataError {
    using DataError::DataError;
};

// attention
class MalformedAttention : public DataError {
    using DataError::DataError;
};
class EmptyProfile : public DataError {
    using DataError::DataError;
};
class ProfileMismatch : public DataError {
    using DataError::DataError;
};

// tsa
class NonFiniteValue : public InvariantViolation {
    using InvariantViolation::InvariantViolation;
};

}  // namespace fovea
