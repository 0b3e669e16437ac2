#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>

namespace cvtomo {

/// Invalid input: bad state parameters, malformed grids, shape mismatches.
/// The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation could not produce a trustworthy number. CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A truncated analytic state discards more probability than allowed.
class TruncationError : public ValidationError {
 public:
  TruncationError(std::string parameter, double error, double bound)
      : ValidationError("truncation error " + std::to_string(error) +
                        " exceeds bound " + std::to_string(bound) +
                        " (reduce '" + parameter + "' or raise n_c)"),
        parameter_(std::move(parameter)),
        error_(error) {}

  const std::string& parameter() const noexcept { return parameter_; }
  double error() const noexcept { return error_; }

 private:
  std::string parameter_;
  double error_;
};

/// One or more bins carry (numerically) zero probability, so the Fisher
/// information is undefined there.
class DegenerateBinError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

namespace detail {
inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}
}  // namespace detail

class IllConditionedError : public NumericalError {
 public:
  explicit IllConditionedError(double condition_number, const std::string& context = "")
      : NumericalError(context + "Fisher information is ill-conditioned (condition number " +
                       detail::sci(condition_number) + ", guard exceeded)"),
        condition_number_(condition_number) {}

  double condition_number() const noexcept { return condition_number_; }

 private:
  double condition_number_;
};

/// Probability mass outside the measurement grid is too large to ignore.
class LeakageError : public NumericalError {
 public:
  explicit LeakageError(double leak)
      : NumericalError("excessive grid leakage: " + detail::sci(leak) +
                       " of the probability lies outside the grid; widen the span"),
        leak_(leak) {}

  double leak() const noexcept { return leak_; }

 private:
  double leak_;
};

}  // namespace cvtomo
