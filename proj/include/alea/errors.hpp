#pragma once

#include <stdexcept>
#include <string>

namespace alea {

/// Operand dimensions do not agree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid configuration document or parameter combination.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure during optimisation (non-finite loss or gradient).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// API misuse, e.g. back-propagating from a non-scalar node.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace alea
