#pragma once

#include <stdexcept>
#include <string>

namespace deephedge {

// Caller broke a documented precondition (negative trade size, bad shape...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid or inconsistent configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN or infinity where a finite number is required.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A non-finite value showed up while rolling out an episode.
class EpisodeError : public NumericalError {
 public:
  EpisodeError(int step, const std::string& what)
      : NumericalError("episode step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

class TrainingFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace deephedge
