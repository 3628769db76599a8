#pragma once

#include <stdexcept>
#include <string>

namespace compgrad {

// Bad dimensions, invalid parameter values, malformed configs.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/Inf encountered mid-computation; message identifies where.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Variance requested from fewer than two samples.
class InsufficientSamples : public std::runtime_error {
 public:
  explicit InsufficientSamples(const std::string& what)
      : std::runtime_error(what) {}
};

// Task name not in the registry; gets its own CLI exit code.
class UnknownTaskError : public ConfigError {
 public:
  explicit UnknownTaskError(const std::string& what) : ConfigError(what) {}
};

}  // namespace compgrad
