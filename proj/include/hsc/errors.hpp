#pragma once

#include <stdexcept>
#include <string>

namespace hsc {

// Invalid configuration supplied by the user (CLI exit code 1).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller violated an operation's precondition (CLI exit code 2).
struct ContractError : std::logic_error {
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// File system / parsing failure (CLI exit code 3).
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hsc
