#pragma once

#include <stdexcept>
#include <string>

namespace sahiqc {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Caller violated a documented precondition (bad dimensions, bad bounds,
/// unsupported degree, ...).
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error(what) {}
};

/// A numeric routine could not deliver a trustworthy result (eigenvalue
/// residual too large, bisection bracket never found, ...).
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(what) {}
};

/// Malformed input file. Carries enough context to locate the offending
/// field.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what) {}
};

}  // namespace sahiqc
