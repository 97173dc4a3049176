#pragma once

#include <stdexcept>
#include <string>

namespace gpcpd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit together.
class StructuralError : public Error {
public:
  using Error::Error;
};

/// Input is numerically degenerate (e.g. a zero tensor where a norm is divided by).
class DegenerateInputError : public Error {
public:
  using Error::Error;
};

class SingularityError : public Error {
public:
  using Error::Error;
};

/// A genericity assumption of the method failed on this input; a random
/// mode mixing usually restores it.
class GenericityError : public Error {
public:
  using Error::Error;
};

class ConditioningError : public Error {
public:
  using Error::Error;
};

class UnsupportedRankError : public Error {
public:
  using Error::Error;
};

class NonFiniteError : public Error {
public:
  using Error::Error;
};

/// Raised by residual callbacks when the iterate leaves the admissible domain.
class DomainGuardViolation : public Error {
public:
  using Error::Error;
};

class InconsistentRowsError : public Error {
public:
  using Error::Error;
};

class Stage2Failure : public Error {
public:
  using Error::Error;
};

class AssemblyFailure : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  using Error::Error;
};

} // namespace gpcpd
