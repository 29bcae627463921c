#pragma once

#include <stdexcept>
#include <string>

namespace netsched {

// Invalid user input: bad config file, malformed CSV, parameter out of range.
// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown: non-convergence, stochasticity violations beyond
// tolerance, singular systems without a fallback. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace netsched
