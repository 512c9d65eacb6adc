#pragma once

#include <stdexcept>
#include <string>

namespace fpf {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operand dimensions do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

// A time or index lies outside the admissible range, or an ordering is violated.
class DomainError : public Error {
public:
    using Error::Error;
};

// A numerical precondition failed (non-Hermitian generator, incomplete basis, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Every history consistent with the constraints has zero weight; the measure is undefined.
class ZeroNormalizationError : public Error {
public:
    using Error::Error;
};

// Refusing to enumerate a history family larger than the configured limit.
class CombinatorialLimitError : public Error {
public:
    using Error::Error;
};

}  // namespace fpf
