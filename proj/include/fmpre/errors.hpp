#pragma once

#include <stdexcept>
#include <string>

namespace fmpre {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed inconsistent dimensions or an invalid argument.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A computation produced NaN/Inf.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// The S-step (or a caller) produced a component with no observations.
class EmptyPartition : public Error {
 public:
  explicit EmptyPartition(int component)
      : Error("component " + std::to_string(component) + " received no observations"),
        component_(component) {}
  int component() const noexcept { return component_; }

 private:
  int component_;
};

/// Penalty-free normal equations are (numerically) singular.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

/// Every SEM restart failed.
class FitFailed : public Error {
 public:
  using Error::Error;
};

class TuningFailed : public Error {
 public:
  using Error::Error;
};

class SummaryUndefined : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; carries the 1-based line number when known.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, long line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

}  // namespace fmpre
