#pragma once

#include <stdexcept>
#include <string>

namespace lco {

// Base of every error the library raises. Callers that only care about
// "something was wrong with the request" can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

class DivergenceUndefinedError : public Error {
 public:
  using Error::Error;
};

class DegenerateRatioError : public Error {
 public:
  using Error::Error;
};

class InactiveRegionError : public Error {
 public:
  using Error::Error;
};

class KinkError : public Error {
 public:
  using Error::Error;
};

class WitnessSearchFailedError : public Error {
 public:
  using Error::Error;
};

class EstimatorDomainError : public Error {
 public:
  using Error::Error;
};

class InvalidStateError : public Error {
 public:
  using Error::Error;
};

class NonFiniteGradientError : public Error {
 public:
  using Error::Error;
};

/// A CSV lacks a column the caller asked for.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::string column) : Error(what), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class StepSizeTooLargeError : public Error {
 public:
  StepSizeTooLargeError(const std::string& what, double rho) : Error(what), rho_(rho) {}
  double rho() const noexcept { return rho_; }

 private:
  double rho_;
};

}  // namespace lco
