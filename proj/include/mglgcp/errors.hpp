#pragma once

#include <stdexcept>
#include <string>

namespace mglgcp {

// Bad user input: malformed files, invalid graphs, out-of-range arguments.
// The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical breakdown: failed factorizations, non-converging solvers.
// The CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DisconnectedGraph : public InputError {
 public:
  using InputError::InputError;
};

class NonpositiveLength : public InputError {
 public:
  using InputError::InputError;
};

class DuplicateEdgeId : public InputError {
 public:
  using InputError::InputError;
};

class PointOffEdge : public InputError {
 public:
  using InputError::InputError;
};

class NonpositiveParameter : public InputError {
 public:
  using InputError::InputError;
};

class MisalignedVector : public InputError {
 public:
  using InputError::InputError;
};

class ConstantColumn : public InputError {
 public:
  using InputError::InputError;
};

class MissingValue : public InputError {
 public:
  using InputError::InputError;
};

// File or parse failures; carries the offending line when known.
class ParseError : public InputError {
 public:
  ParseError(const std::string& source, int line, const std::string& what)
      : InputError(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class SingularMatrix : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Schur complement failed because the eliminated block is not positive definite.
class SingularBlock : public SingularMatrix {
 public:
  using SingularMatrix::SingularMatrix;
};

class NewtonDivergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class OptimizerFailure : public NumericalError {
 public:
  OptimizerFailure(const std::string& what, std::string trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const std::string& trace() const { return trace_; }

 private:
  std::string trace_;
};

class DegeneratePosterior : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace mglgcp
