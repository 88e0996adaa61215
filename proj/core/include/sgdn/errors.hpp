#pragma once

#include <stdexcept>
#include <string>

namespace sgdn {

/// Raised when an input violates an operation's preconditions (bad shape,
/// wrong color-space tag, non-finite pixels, inconsistent config).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a run cannot continue (I/O failure, diverging loss).
class RuntimeAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sgdn
