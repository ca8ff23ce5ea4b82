#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace frg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed, inconsistent or unusable input data.
class DataError : public Error {
 public:
  using Error::Error;
  DataError(const std::string& what, std::size_t row)
      : Error(what + " (row " + std::to_string(row) + ")"), row_(row) {}

  /// 1-based source row, or 0 when the error is not tied to a row.
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_ = 0;
};

/// A loss, gradient or parameter became NaN or infinite.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, corrupted or version-mismatched file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The adjustment calibration found no qualifying model.
class CalibrationFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace frg
