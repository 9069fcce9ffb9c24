#pragma once

#include <stdexcept>
#include <string>

namespace regmech {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of a primitive (e.g. q > qbar).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A precondition of an operation does not hold.
class ContractError : public Error {
public:
    using Error::Error;
};

/// The market primitives violate a modelling assumption (monotone demand, top-type operation, floor bracket).
class AssumptionError : public Error {
public:
    using Error::Error;
};

} // namespace regmech
