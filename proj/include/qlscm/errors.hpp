#pragma once

#include <stdexcept>
#include <string>

namespace qlscm {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Configuration / usage problems (bad flags, bad parameter values).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Argument outside its mathematical domain (p not in (0,1), sigma <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Input data problems: missing columns, unparsable cells, duplicates,
// failed validation.
class DataError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class DuplicationError : public DataError {
 public:
  using DataError::DataError;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

// Numerical failures: singular designs, factorization breakdown,
// estimation impossible.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularDesignError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EstimationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace qlscm
