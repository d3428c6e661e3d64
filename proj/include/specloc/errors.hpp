#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace specloc {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

class GenerationFailure : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; `line` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A structurally well-formed pattern that violates d-regularity or set semantics.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::size_t vertex, std::size_t line = 0)
      : Error(what), vertex_(vertex), line_(line) {}
  std::size_t vertex() const noexcept { return vertex_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t vertex_;
  std::size_t line_;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Out-of-range L or empty vector in the rearrangement-norm family.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class CapExceeded : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, double worst_residual)
      : Error(what), worst_residual_(worst_residual) {}
  double worst_residual() const noexcept { return worst_residual_; }

 private:
  double worst_residual_;
};

class SolveFailure : public Error {
 public:
  SolveFailure(const std::string& what, double worst_residual)
      : Error(what), worst_residual_(worst_residual) {}
  double worst_residual() const noexcept { return worst_residual_; }

 private:
  double worst_residual_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class QuadratureBudget : public Error {
 public:
  QuadratureBudget(const std::string& what, double estimate)
      : Error(what), estimate_(estimate) {}
  double estimate() const noexcept { return estimate_; }

 private:
  double estimate_;
};

class EmptyWindow : public Error {
 public:
  using Error::Error;
};

class DegenerateDraw : public Error {
 public:
  using Error::Error;
};

}  // namespace specloc
