#pragma once

#include <stdexcept>
#include <string>

namespace rfs {

// Loss or gradient became non-finite during training.
class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(const std::string& what) : std::runtime_error(what) {}
};

// Branch coefficients cannot be normalized (all zero under abs normalization).
class DegenerateCoefficients : public std::domain_error {
 public:
  explicit DegenerateCoefficients(const std::string& what) : std::domain_error(what) {}
};

// Configuration rejected by schema validation.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace rfs
