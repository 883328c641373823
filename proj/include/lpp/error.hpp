#pragma once

#include <stdexcept>
#include <string>

namespace lpp {

//! Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

//! An argument lies outside the domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

//! A moment generating function was evaluated at or beyond its abscissa.
class DivergenceError : public Error {
public:
    using Error::Error;
};

//! A computation would exceed a fixed size budget.
class CapacityError : public Error {
public:
    using Error::Error;
};

//! Malformed or unknown configuration input.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace lpp
