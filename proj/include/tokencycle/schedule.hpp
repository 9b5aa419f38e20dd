#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tokencycle/errors.hpp"

namespace tokencycle {

enum class Interpolation { piecewise_constant, linear };

// Time-indexed exogenous input (demand, supply, subsidy, social signal).
// Evaluation outside the breakpoint range returns the nearest endpoint.
class Schedule {
public:
  Schedule() = default;

  Schedule(std::vector<std::pair<double, double>> breakpoints,
           Interpolation interpolation = Interpolation::piecewise_constant)
      : breakpoints_(std::move(breakpoints)), interpolation_(interpolation) {}

  static Schedule constant(double value) {
    return Schedule({{0.0, value}});
  }

  const std::vector<std::pair<double, double>>& breakpoints() const {
    return breakpoints_;
  }
  Interpolation interpolation() const { return interpolation_; }

  void validate(const std::string& field) const {
    if (breakpoints_.empty()) {
      throw ConfigError(field, "needs at least one breakpoint");
    }
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
      if (!(breakpoints_[i - 1].first < breakpoints_[i].first)) {
        throw ConfigError(field + ".breakpoints[" + std::to_string(i) + "]",
                          "times must be strictly increasing");
      }
    }
  }

  double at(double t) const {
    if (t <= breakpoints_.front().first) {
      return breakpoints_.front().second;
    }
    if (t >= breakpoints_.back().first) {
      return breakpoints_.back().second;
    }
    std::size_t hi = 1;
    while (breakpoints_[hi].first <= t) {
      ++hi;
    }
    const auto& [t0, v0] = breakpoints_[hi - 1];
    const auto& [t1, v1] = breakpoints_[hi];
    if (interpolation_ == Interpolation::piecewise_constant) {
      return v0;
    }
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
  }

private:
  std::vector<std::pair<double, double>> breakpoints_{{0.0, 0.0}};
  Interpolation interpolation_ = Interpolation::piecewise_constant;
};

// Uniform grid t_start + k*dt for k = 0..n_steps (n_steps + 1 points).
struct TimeGrid {
  double t_start = 0.0;
  double dt = 1.0;
  long long n_steps = 1;

  void validate(const std::string& field = "grid") const {
    if (!(dt > 0.0)) throw ConfigError(field + ".dt", "must be > 0");
    if (n_steps < 1) throw ConfigError(field + ".n_steps", "must be >= 1");
  }

  std::size_t size() const { return static_cast<std::size_t>(n_steps) + 1; }

  double time_at(std::size_t k) const {
    return t_start + static_cast<double>(k) * dt;
  }
};

}  // namespace tokencycle
