#pragma once

#include <stdexcept>
#include <string>

namespace jetqd {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checked integer arithmetic left the native range.
class OverflowError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Failures of a numerical procedure (mapped to exit code 3 by the CLI).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// The wave function vanishes (to the configured floor) where momentums were requested.
class NodeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A trajectory ran into a region where |R| exceeded its bound.
class NodeApproach : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// The adaptive controller pushed the step below its floor.
class StepFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class GridTooCoarse : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class QuadratureDivergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A closure policy could not supply the momentums the right-hand side needs.
class OracleUnavailable : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class MissingMomentum : public Error {
 public:
  using Error::Error;
};

class PacketsOverlap : public Error {
 public:
  using Error::Error;
};

class AmbiguousBranch : public Error {
 public:
  using Error::Error;
};

}  // namespace jetqd
