// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <stdexcept>
#include <string>

namespace betapool {

// Exit-code contract used by the CLI: 1 config, 2 data, 3 fit.
class Error : public std::runtime_error {
 public:
  Error(std::string msg, int exit_code)
      : std::runtime_error(std::move(msg)), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::string msg) : Error(std::move(msg), 1) {}
};

class DataError : public Error {
 public:
  explicit DataError(std::string msg) : Error(std::move(msg), 2) {}
};

class FitError : public Error {
 public:
  explicit FitError(std::string msg) : Error(std::move(msg), 3) {}
};

// Malformed input file (bad header, unparseable row).
class ParseError : public DataError {
 public:
  using DataError::DataError;
};

// Structurally wrong payload (wrong row count, wrong column set).
class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

// Probabilities do not form a distribution within tolerance.
class InvalidForecastError : public DataError {
 public:
  using DataError::DataError;
};

// Value outside the range covered by a bin structure.
class OutOfSupportError : public DataError {
 public:
  using DataError::DataError;
};

// Distributions on different bin grids where a shared grid is required.
class StructureError : public DataError {
 public:
  using DataError::DataError;
};

// Invalid parameter values (nonpositive beta parameters, bad simplex).
class DomainError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyDatasetError : public DataError {
 public:
  using DataError::DataError;
};

// All cross-validation candidates failed.
class SelectionError : public FitError {
 public:
  using FitError::FitError;
};

}  // namespace betapool
