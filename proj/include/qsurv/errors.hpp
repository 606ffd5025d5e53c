// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace qsurv {

/// Broad failure class. The CLI maps each category onto a process exit code.
enum class ErrorKind {
  usage = 2,
  data = 3,
  numeric = 4,
  internal = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Quadrature order outside the supported range.
class InvalidOrderError : public Error {
 public:
  explicit InvalidOrderError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

/// Invalid configuration value (bad K, rank, batch size, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

/// Violated call precondition that is the caller's fault.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error(ErrorKind::internal, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// A non-finite value appeared where a finite one is required.
class NumericDomainError : public Error {
 public:
  explicit NumericDomainError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

class IngestionError : public Error {
 public:
  explicit IngestionError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// All-censored or otherwise unusable training data.
class DegenerateDataError : public Error {
 public:
  explicit DegenerateDataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class CalibrationError : public Error {
 public:
  explicit CalibrationError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

class HorizonError : public Error {
 public:
  explicit HorizonError(const std::string& what) : Error(ErrorKind::data, what) {}
};

}  // namespace qsurv
