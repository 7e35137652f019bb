#pragma once

#include <stdexcept>
#include <string>

namespace nonlocal_flow {

// Base class for every failure raised by the library. Each subclass maps to
// one named error condition so callers can catch exactly what they handle.
class FlowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptySpec : public FlowError {
 public:
  EmptySpec() : FlowError("initial datum has no atoms or pieces") {}
};

class NonpositiveWeight : public FlowError {
 public:
  using FlowError::FlowError;
};

class NoHypothesis : public FlowError {
 public:
  using FlowError::FlowError;
};

/// The denominator of lambda, the integral of g(u), is numerically zero.
class DenominatorVanishes : public FlowError {
 public:
  DenominatorVanishes(double denominator, double threshold);
  double denominator() const { return denominator_; }

 private:
  double denominator_;
};

class StepSizeUnderflow : public FlowError {
 public:
  StepSizeUnderflow(double time, double h);
};

class DegenerateSupport : public FlowError {
 public:
  using FlowError::FlowError;
};

class NoSettlingTime : public FlowError {
 public:
  using FlowError::FlowError;
};

class SchemaError : public FlowError {
 public:
  SchemaError(std::string path, const std::string& message)
      : FlowError(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class IoError : public FlowError {
 public:
  using FlowError::FlowError;
};

}  // namespace nonlocal_flow
