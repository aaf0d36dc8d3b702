#pragma once

#include <stdexcept>
#include <string>

namespace cohortnet {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File system / stream failures (CLI exit code 2).
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (CLI exit code 1).
class DataError : public Error {
 public:
  using Error::Error;
};

// A series or population too small for the requested estimate.
class InsufficientData : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace cohortnet
