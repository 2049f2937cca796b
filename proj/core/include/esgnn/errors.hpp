#pragma once

#include <stdexcept>
#include <string>

namespace esgnn {

// Error taxonomy mirrored by the CLI exit codes: config -> 2, data -> 3,
// numerical -> 4. Shape errors are a kind of config error (caller bug).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public ConfigError {
 public:
  explicit ShapeError(const std::string& msg) : ConfigError(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace esgnn
