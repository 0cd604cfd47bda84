#pragma once

#include <stdexcept>
#include <string>

namespace derrd {

// Bad input files, bad config keys/values. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss or gradient during training. CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace derrd
