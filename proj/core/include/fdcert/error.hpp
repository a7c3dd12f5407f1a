#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fdcert {

/// Base of every error thrown by the toolchain.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-domain input (non-finite entries, nonpositive parameters).
class InputError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A matrix that had to be positive definite (or invertible) was not.
class SingularityError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

/// Q-form ellipsoid with a singular shape where a nondegenerate one is needed.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

class CertificateError : public Error {
 public:
  using Error::Error;
};

class SynthesisError : public Error {
 public:
  using Error::Error;
};

/// Model failed a structural check (e.g. unstable observer error dynamics).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Propagated set escapes a loop-head invariant at the back edge.
class AutocodeError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace fdcert
