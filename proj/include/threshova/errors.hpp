#pragma once

#include <stdexcept>
#include <string>

namespace threshova {

// Two error families, matching the CLI exit-code contract:
//   ConfigError  -> user/configuration problems (exit 2)
//   NumericError -> numerical failures such as rank loss (exit 3)
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

class DomainError : public ConfigError {
 public:
  explicit DomainError(const std::string& msg) : ConfigError(msg) {}
};

class IngestionError : public ConfigError {
 public:
  explicit IngestionError(const std::string& msg) : ConfigError(msg) {}
};

class SingularDesignError : public NumericError {
 public:
  explicit SingularDesignError(const std::string& msg) : NumericError(msg) {}
};

class RankError : public NumericError {
 public:
  explicit RankError(const std::string& msg) : NumericError(msg) {}
};

class DegreesOfFreedomError : public NumericError {
 public:
  explicit DegreesOfFreedomError(const std::string& msg) : NumericError(msg) {}
};

class ZeroVarianceError : public NumericError {
 public:
  explicit ZeroVarianceError(const std::string& msg) : NumericError(msg) {}
};

class CalibrationError : public NumericError {
 public:
  explicit CalibrationError(const std::string& msg) : NumericError(msg) {}
};

}  // namespace threshova
