#pragma once

#include <stdexcept>
#include <string>

namespace spinbath {

// Invalid parameters, malformed input files, contract violations. CLI exit 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical stage failed (non-convergence, step underflow, ...). CLI exit 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spinbath
