#pragma once

#include <stdexcept>
#include <string>

namespace edacam {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user-supplied configuration. The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A file or directory expected on disk is missing or unreadable.
class LoadError : public Error {
 public:
  using Error::Error;
};

// Data on disk violates a session invariant (duration mismatch, overlapping
// pinch intervals, ...).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Not enough data to run the requested computation.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// Correlation of a rank-degenerate input. Callers decide the policy.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

// Iterative solver failed to reach its convergence criterion.
class DecompositionError : public Error {
 public:
  using Error::Error;
};

// Tensor passed to the model does not match the built configuration.
class InputError : public Error {
 public:
  using Error::Error;
};

// Face detector found no usable box and no fallback was configured.
class DetectionError : public Error {
 public:
  using Error::Error;
};

// Training loss went non-finite.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Session timeline does not follow the recording protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace edacam
