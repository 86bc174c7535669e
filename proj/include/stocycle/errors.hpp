#pragma once

#include <stdexcept>
#include <string>

namespace stocycle {

// Exception hierarchy. The CLI maps each class to its own exit code.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stocycle
