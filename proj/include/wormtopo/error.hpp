#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wormtopo {

/// Broad failure category; the CLI maps each one to an exit code.
enum class ErrorKind {
    Config,    ///< bad parameter or configuration (exit 2)
    Data,      ///< malformed or unusable input data (exit 3)
    Numerical  ///< a numerical routine failed (exit 4)
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

/// Row-level parse failure. line() is 1-based.
class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class InsufficientDataError : public DataError {
public:
    using DataError::DataError;
};

/// The first frame of a series is occluded, so there is nothing to carry forward.
class OcclusionError : public DataError {
public:
    using DataError::DataError;
};

/// A filtration is missing a face of one of its simplices.
class StructuralError : public DataError {
public:
    using DataError::DataError;
};

/// Two objects defined on different grids or dimensions were combined.
class IncompatibleError : public DataError {
public:
    using DataError::DataError;
};

/// A learner was given a single class, so there is nothing to separate.
class DegenerateError : public DataError {
public:
    using DataError::DataError;
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

int exit_code(ErrorKind kind) noexcept;

}  // namespace wormtopo
