#pragma once

#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cascopt {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// Bad user input. Maps to CLI exit code 2.
class ParameterError : public Error {
 public:
  ParameterError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }
  const char* kind() const noexcept override { return "invalid-parameter"; }

 private:
  std::string field_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

// Everything below maps to CLI exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical"; }
};

class StepSizeUnderflow : public NumericalError {
 public:
  explicit StepSizeUnderflow(double t)
      : NumericalError(message(t)), time_(t) {}
  double time() const noexcept { return time_; }
  const char* kind() const noexcept override { return "step-size-underflow"; }

 private:
  static std::string message(double t) {
    std::ostringstream os;
    os << "step size underflow at t = " << t;
    return os.str();
  }
  double time_;
};

class NotHurwitz : public NumericalError {
 public:
  explicit NotHurwitz(std::vector<std::complex<double>> offending)
      : NumericalError(message(offending)), eigenvalues_(std::move(offending)) {}
  const std::vector<std::complex<double>>& eigenvalues() const noexcept {
    return eigenvalues_;
  }
  const char* kind() const noexcept override { return "non-hurwitz"; }

 private:
  static std::string message(const std::vector<std::complex<double>>& ev) {
    std::ostringstream os;
    os << "drift matrix is not Hurwitz; eigenvalues with Re >= 0:";
    for (const auto& z : ev) os << " (" << z.real() << "," << z.imag() << ")";
    return os.str();
  }
  std::vector<std::complex<double>> eigenvalues_;
};

class NoConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "no-convergence"; }
};

class NonPhysicalState : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "non-physical"; }
};

class NegativeSpectrum : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "negative-spectrum"; }
};

class UnresolvablePeaks : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "unresolvable-peaks"; }
};

class NotConverged : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "not-converged"; }
};

}  // namespace cascopt
