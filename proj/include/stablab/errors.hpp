#pragma once

#include <stdexcept>
#include <string>

namespace stablab {

// Two failure families. The CLI maps PreconditionError to exit code 2 and
// NumericalFault to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class NumericalFault : public Error {
 public:
  using Error::Error;
};

class EnumerationBudgetError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class UnsupportedDimension : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class DomainError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class InsufficientData : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class MeanNotRemoved : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class ModelViolation : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class DominanceViolation : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class ParseError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class RealityViolation : public NumericalFault {
 public:
  using NumericalFault::NumericalFault;
};

class SmallDivisor : public NumericalFault {
 public:
  using NumericalFault::NumericalFault;
};

class Divergence : public NumericalFault {
 public:
  using NumericalFault::NumericalFault;
};

class DomainEscape : public NumericalFault {
 public:
  using NumericalFault::NumericalFault;
};

class StepFailure : public NumericalFault {
 public:
  using NumericalFault::NumericalFault;
};

class IntegrationFault : public NumericalFault {
 public:
  using NumericalFault::NumericalFault;
};

}  // namespace stablab
