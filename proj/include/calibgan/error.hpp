#ifndef CALIBGAN_ERROR_HPP
#define CALIBGAN_ERROR_HPP

#include <stdexcept>
#include <string>

/**
 * @file error.hpp
 * @brief Exception hierarchy shared by every calibgan module.
 */

namespace calibgan {

/**
 * Base class for all errors raised by the library.
 * The CLI maps `ConfigError` to exit code 2 and every other `Error` to exit code 1.
 */
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/** Operand shapes are incompatible. */
class ShapeError : public Error {
public:
    using Error::Error;
};

/** Input lies outside the domain of an operation (empty matrix, degenerate variance, ...). */
class DomainError : public Error {
public:
    using Error::Error;
};

/** A computation produced or received a non-finite value. */
class NumericError : public Error {
public:
    using Error::Error;
};

/** An object was used in the wrong lifecycle state, e.g. backward before forward. */
class StateError : public Error {
public:
    using Error::Error;
};

/** Malformed input file. */
class ParseError : public Error {
public:
    using Error::Error;
};

/** Filesystem failure. */
class IoError : public Error {
public:
    using Error::Error;
};

/** Invalid user configuration (flags, config files, spec files). */
class ConfigError : public Error {
public:
    using Error::Error;
};

}

#endif
