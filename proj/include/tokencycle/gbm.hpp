#pragma once

#include <cmath>
#include <vector>

#include "tokencycle/errors.hpp"
#include "tokencycle/random.hpp"
#include "tokencycle/schedule.hpp"

namespace tokencycle {

// Geometric Brownian motion path on the grid, using the exact log-space
// solution per step:
//   W_{k+1} = W_k * exp((drift - volatility^2/2) dt + volatility sqrt(dt) z_k)
// No discretization bias, and every value stays strictly positive.
inline std::vector<double> gbm_path(double w0, double drift, double volatility,
                                    const TimeGrid& grid,
                                    RandomStream& stream) {
  if (!(w0 > 0.0)) {
    throw ConfigError("gbm.w0", "must be > 0");
  }
  if (!(volatility >= 0.0)) {
    throw ConfigError("gbm.volatility", "must be >= 0");
  }
  grid.validate();
  const double mean_step = (drift - 0.5 * volatility * volatility) * grid.dt;
  const double vol_step = volatility * std::sqrt(grid.dt);
  std::vector<double> path;
  path.reserve(grid.size());
  double w = w0;
  path.push_back(w);
  for (long long k = 0; k < grid.n_steps; ++k) {
    w *= std::exp(mean_step + vol_step * stream.next_normal());
    path.push_back(w);
  }
  return path;
}

}  // namespace tokencycle
