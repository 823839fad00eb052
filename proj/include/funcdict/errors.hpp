#pragma once

#include <stdexcept>
#include <string>

namespace funcdict {

// Maps to CLI exit code 2.
struct InvalidInputError : std::runtime_error {
  explicit InvalidInputError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidConfigError : std::runtime_error {
  explicit InvalidConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidStateError : std::runtime_error {
  explicit InvalidStateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Maps to CLI exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace funcdict
