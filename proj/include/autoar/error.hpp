#pragma once

#include <stdexcept>
#include <string>

namespace autoar {

/// Base class for every error raised by the library. The category decides
/// the CLI exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration (bad grid, unsupported d, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, malformed or too-short input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A solve or factorization that could not produce finite results.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace autoar
