#pragma once

#include <stdexcept>
#include <string>

namespace sitsr {

/// Invalid data fed to an operation (shape mismatch, empty input, ...).
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Inconsistent or unsupported configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Caller misuse of a contract (maps to CLI exit code 2).
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Operation attempted on an object in the wrong state (e.g. missing weights).
class StateError : public std::runtime_error {
 public:
  explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Optimization failure (non-finite gradients and the like).
class TrainError : public std::runtime_error {
 public:
  explicit TrainError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sitsr
