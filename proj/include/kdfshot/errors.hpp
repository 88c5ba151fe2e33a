#pragma once

#include <stdexcept>
#include <string>

namespace kdfshot {

// Bad run configuration or invalid operation arguments. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or truncated data file. CLI exit code 3.
class DataFormatError : public std::runtime_error {
 public:
  explicit DataFormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss or other numeric breakdown during a run. CLI exit code 4.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace kdfshot
