#pragma once

#include <stdexcept>
#include <string>

namespace inav {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct GenerationError : std::runtime_error {
  explicit GenerationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TrainingDivergence : std::runtime_error {
  TrainingDivergence(const std::string& msg, int epoch)
      : std::runtime_error(msg), epoch(epoch) {}
  int epoch;
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace inav
