#ifndef REPCTL_ERRORS_HPP
#define REPCTL_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace repctl {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// One violated constraint, keyed by the dotted path of the offending field.
struct FieldError {
  std::string field;
  std::string message;
};

class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<FieldError> errors)
      : std::invalid_argument(summarize(errors)), errors_(std::move(errors)) {}

  const std::vector<FieldError>& errors() const noexcept { return errors_; }

 private:
  static std::string summarize(const std::vector<FieldError>& errors) {
    std::string out = "invalid configuration:";
    for (const auto& e : errors) out += " [" + e.field + ": " + e.message + "]";
    return out;
  }

  std::vector<FieldError> errors_;
};

/// Explicit scheme refused: the requested step count breaks the stability bound.
class CflError : public std::runtime_error {
 public:
  CflError(std::size_t requested, std::size_t required)
      : std::runtime_error("CFL violation: " + std::to_string(requested) +
                           " time steps requested, at least " +
                           std::to_string(required) + " required"),
        requested_(requested),
        required_(required) {}

  std::size_t requested_steps() const noexcept { return requested_; }
  std::size_t required_steps() const noexcept { return required_; }

 private:
  std::size_t requested_;
  std::size_t required_;
};

/// ODE integration produced non-finite values.
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values produced by a time-marching solver.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t slice)
      : std::runtime_error(what + " (time slice " + std::to_string(slice) + ")"),
        slice_(slice) {}

  std::size_t slice() const noexcept { return slice_; }

 private:
  std::size_t slice_;
};

}  // namespace repctl

#endif  // REPCTL_ERRORS_HPP
