#ifndef RECALL_ERRORS_HPP
#define RECALL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace recall
{

/// Base of every error thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Mismatched vector or matrix dimensions.
class ShapeError : public Error
{
public:
    using Error::Error;
};

/// Value outside the mathematical domain of an operation (zero norm, non-finite entry).
class DomainError : public Error
{
public:
    using Error::Error;
};

/// Violated precondition on an argument (empty batch, bad index, non-positive step).
class ArgumentError : public Error
{
public:
    using Error::Error;
};

/// Inconsistent data: unknown ids, missing ground truth, orphan correctives.
class DataError : public Error
{
public:
    using Error::Error;
};

/// An oracle answered with a payload that breaks the wire contract.
class ProtocolError : public Error
{
public:
    using Error::Error;
};

/// An oracle could not be reached, or asked to be retried.
class TransportError : public Error
{
public:
    using Error::Error;
};

/// A required input file or directory is missing or unreadable.
class InputError : public Error
{
public:
    using Error::Error;
};

/// A persisted artifact does not match its schema.
class SchemaError : public Error
{
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error
{
public:
    using Error::Error;
};

} // namespace recall

#endif
