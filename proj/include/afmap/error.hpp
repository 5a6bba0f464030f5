#pragma once

#include <stdexcept>
#include <string>

namespace afmap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input / configuration problems.
class ParseError : public Error { using Error::Error; };
class NonManifoldError : public Error { using Error::Error; };
class DegenerateFaceError : public Error { using Error::Error; };
class DimensionMismatchError : public Error { using Error::Error; };
class InvalidRangeError : public Error { using Error::Error; };
class DeadChannelError : public Error { using Error::Error; };
class DisconnectedMeshError : public Error { using Error::Error; };

/// Numerical failures. The CLI maps these to exit code 2.
class NumericalError : public Error { using Error::Error; };
class ConvergenceError : public NumericalError { using NumericalError::NumericalError; };
class FirstEigenvalueError : public NumericalError { using NumericalError::NumericalError; };
class GainUnderflowError : public NumericalError { using NumericalError::NumericalError; };
class SingularSystemError : public NumericalError { using NumericalError::NumericalError; };

class NonFiniteLossError : public NumericalError {
 public:
  NonFiniteLossError(const std::string& what, long iteration = -1)
      : NumericalError(what), iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

}  // namespace afmap
