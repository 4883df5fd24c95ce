#pragma once

#include <stdexcept>
#include <string>

namespace spinretro {

// Bad run configuration / CLI arguments. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent measurement data. CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Grid-oracle convergence failure or closed-form/oracle mismatch. CLI exit code 4.
class OracleError : public std::runtime_error {
 public:
  explicit OracleError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace spinretro
