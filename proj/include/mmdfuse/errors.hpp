#pragma once

#include <stdexcept>
#include <string>

namespace mmdfuse {

// Invalid parameters, specs, or flag combinations. CLI maps this to exit 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Problems with input data: parse failures, missing columns, degenerate or
// insufficient samples. CLI maps this to exit 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mmdfuse
