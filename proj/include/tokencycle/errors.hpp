#pragma once

#include <stdexcept>
#include <string>

namespace tokencycle {

// Bad value in a scenario file or a config struct. `field` is the path of
// the offending entry, e.g. "params.p_max".
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

// Model evaluation left its mathematical domain (e.g. non-positive token
// supply). Carries the time point, and the trial index once annotated.
class DomainError : public std::runtime_error {
public:
  DomainError(double t, const std::string& what)
      : std::runtime_error("t=" + std::to_string(t) + ": " + what), t_(t) {}

  DomainError(double t, long long trial_index, const std::string& what)
      : std::runtime_error("trial " + std::to_string(trial_index) + ", t=" +
                           std::to_string(t) + ": " + what),
        t_(t),
        trial_index_(trial_index) {}

  double t() const noexcept { return t_; }
  long long trial_index() const noexcept { return trial_index_; }

private:
  double t_ = 0.0;
  long long trial_index_ = -1;
};

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Calibration target not reachable within the search bounds.
class CalibrationError : public std::runtime_error {
public:
  CalibrationError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

private:
  double best_residual_;
};

}  // namespace tokencycle
