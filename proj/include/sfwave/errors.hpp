#pragma once

#include <stdexcept>
#include <string>

namespace sfwave {

// Invalid problem description (parameters, hypotheses, file contents).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated an operation's precondition (dimension mismatch, negative time, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Requested closed-form route does not apply to the given problem.
class UnsupportedOracle : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sfwave
