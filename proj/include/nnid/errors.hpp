#pragma once

#include <stdexcept>
#include <string>

namespace nnid {

/// Base of every error raised by the library. `exit_code()` is the CLI
/// process status the error maps to (2 config, 3 data, 4 convergence).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 3; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class DimensionError : public Error { public: using Error::Error; };
class DomainError : public Error { public: using Error::Error; };
class BoundsError : public Error { public: using Error::Error; };
class SpecMismatchError : public Error { public: using Error::Error; };
class NumericalError : public Error { public: using Error::Error; };
class ResourceError : public Error { public: using Error::Error; };
class CapacityError : public Error { public: using Error::Error; };
class DataError : public Error { public: using Error::Error; };

class ConvergenceError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

/// The target accuracy cannot be bracketed even at the ternary payload ceiling.
class InfeasibleTargetError : public ConvergenceError { public: using ConvergenceError::ConvergenceError; };

// Detector failures: nonzero exit, unparsable output, timeout.
class DetectorError : public Error { public: using Error::Error; };
class DetectorParseError : public DetectorError { public: using DetectorError::DetectorError; };
class DetectorTimeoutError : public DetectorError { public: using DetectorError::DetectorError; };

}  // namespace nnid
