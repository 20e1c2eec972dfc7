#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hisd {

/// Bad user input: malformed config, non-orthonormal initial data, grid mismatch.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Base for every numerical guard that can trip while stepping.
/// `kind()` is the stable machine-readable name used in CLI error records.
class NumericalError : public std::runtime_error {
public:
  NumericalError(std::string kind, const std::string &what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string &kind() const noexcept { return kind_; }

  /// Index of the failing step (1-based) once known; 0 means unknown.
  std::size_t step() const noexcept { return step_; }
  void set_step(std::size_t n) noexcept { step_ = n; }

private:
  std::string kind_;
  std::size_t step_ = 0;
};

class SingularMatrix : public NumericalError {
public:
  explicit SingularMatrix(const std::string &what)
      : NumericalError("SingularMatrix", what) {}
};

class StepTooLarge : public NumericalError {
public:
  explicit StepTooLarge(const std::string &what)
      : NumericalError("StepTooLarge", what) {}
};

class DegenerateDirection : public NumericalError {
public:
  explicit DegenerateDirection(const std::string &what)
      : NumericalError("DegenerateDirection", what) {}
};

class ZeroVector : public NumericalError {
public:
  explicit ZeroVector(const std::string &what)
      : NumericalError("ZeroVector", what) {}
};

class InvariantViolation : public NumericalError {
public:
  explicit InvariantViolation(const std::string &what)
      : NumericalError("InvariantViolation", what) {}
};

} // namespace hisd
