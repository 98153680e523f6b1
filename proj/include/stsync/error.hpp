#pragma once

#include <stdexcept>
#include <string>

namespace stsync {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Column rank too small for a QR factorization.
class RankError : public Error {
public:
    using Error::Error;
};

/// Polar projection undefined (singular Gram matrix).
class ProjectionError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class UnsupportedError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class UndefinedGainError : public Error {
public:
    using Error::Error;
};

/// A non-finite value appeared during time stepping.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, double last_good_time)
        : Error(what), last_good_time_(last_good_time) {}

    double last_good_time() const noexcept { return last_good_time_; }

private:
    double last_good_time_;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace stsync
