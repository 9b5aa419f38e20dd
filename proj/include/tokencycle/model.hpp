#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tokencycle/errors.hpp"
#include "tokencycle/schedule.hpp"

namespace tokencycle {

// Every model parameter, plus the exogenous schedules. The source model
// overloads one symbol for both token supply and social reputation; they
// are split here into token_supply_schedule and social_signal_schedule.
struct ScenarioParams {
  double p_max = 0.5;               // saturation participation level
  double adoption_rate = 0.5;       // speed of adoption
  double alpha_financial = 1.0;     // utility weight of the token reward
  double alpha_social = 0.0;        // utility weight of social reputation
  double eta_0 = 0.5;               // initial recycling efficiency
  double eta_growth = 0.0;          // efficiency growth per unit time
  double w_0 = 1000.0;              // initial waste volume
  double waste_drift = 0.0;         // GBM drift of waste generation
  double waste_volatility = 0.0;    // GBM volatility of waste generation
  double waste_linear_growth = 0.0; // linear waste growth (closed form)
  double base_cost = 0.0;           // fixed operational cost
  double unit_cost = 0.0;           // variable cost per recycled unit
  double env_alpha = 0.0;           // environmental benefit per recycled unit
  double carbon_credit_price = 0.0; // credit value per qualifying unit
  double qualifying_fraction = 1.0; // share of recycled volume earning credits

  Schedule subsidy_schedule = Schedule::constant(0.0);
  Schedule demand_schedule = Schedule::constant(1.0);
  Schedule token_supply_schedule = Schedule::constant(1.0);
  Schedule social_signal_schedule = Schedule::constant(0.0);

  void validate(const std::string& field = "params") const {
    auto in_unit = [&](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ConfigError(field + "." + name, "must be in [0, 1]");
      }
    };
    auto non_negative = [&](double v, const char* name) {
      if (!(v >= 0.0)) {
        throw ConfigError(field + "." + name, "must be >= 0");
      }
    };
    in_unit(p_max, "p_max");
    in_unit(eta_0, "eta_0");
    in_unit(qualifying_fraction, "qualifying_fraction");
    non_negative(adoption_rate, "adoption_rate");
    non_negative(waste_volatility, "waste_volatility");
    non_negative(base_cost, "base_cost");
    non_negative(unit_cost, "unit_cost");
    if (!(w_0 > 0.0)) {
      throw ConfigError(field + ".w_0", "must be > 0");
    }
    subsidy_schedule.validate(field + ".subsidy_schedule");
    demand_schedule.validate(field + ".demand_schedule");
    token_supply_schedule.validate(field + ".token_supply_schedule");
    social_signal_schedule.validate(field + ".social_signal_schedule");
    const auto& supply = token_supply_schedule.breakpoints();
    for (std::size_t i = 0; i < supply.size(); ++i) {
      if (!(supply[i].second > 0.0)) {
        throw ConfigError(field + ".token_supply_schedule.breakpoints[" +
                              std::to_string(i) + "]",
                          "supply must be > 0 (t=" +
                              std::to_string(supply[i].first) + ")");
      }
    }
  }
};

// Value plus whether the [0,1] clamp fired.
struct Clamped {
  double value;
  bool clamped;
};

enum class WasteMode { linear, gbm };

struct TrajectoryPoint {
  double t = 0.0;
  double efficiency = 0.0;
  double waste = 0.0;
  double utility = 0.0;
  double participation = 0.0;
  double token_value = 0.0;
  double recycling_volume = 0.0;
  double op_cost = 0.0;
  double env_benefit = 0.0;
  double token_revenue = 0.0;
  double net_benefit = 0.0;
  bool participation_clamped = false;
  bool efficiency_clamped = false;
  bool negative_op_cost = false;
};

inline Clamped efficiency_at(double t, const ScenarioParams& params) {
  const double raw = params.eta_0 + params.eta_growth * t;
  if (raw < 0.0) return {0.0, true};
  if (raw > 1.0) return {1.0, true};
  return {raw, false};
}

inline double utility_at(double token_value, double social_signal,
                         const ScenarioParams& params) {
  return params.alpha_financial * token_value +
         params.alpha_social * social_signal;
}

// Raw adoption response p_max * (1 - e^{-lambda t}) * utility; the product
// can exceed 1, so the rate is clamped to [0, 1] and the clamp reported.
inline Clamped participation_at(double t, double utility,
                                const ScenarioParams& params) {
  const double raw =
      params.p_max * (1.0 - std::exp(-params.adoption_rate * t)) * utility;
  if (raw < 0.0) return {0.0, true};
  if (raw > 1.0) return {1.0, true};
  return {raw, false};
}

inline double token_value_from_market(double demand, double supply,
                                      double t = 0.0) {
  if (!(supply > 0.0)) {
    throw DomainError(t, "token supply must be > 0");
  }
  return demand / supply;
}

inline double recycling_volume(double participation, double efficiency,
                               double waste) {
  return participation * efficiency * waste;
}

inline double operational_cost(double recycled, double subsidy,
                               const ScenarioParams& params) {
  return params.base_cost + params.unit_cost * recycled - subsidy;
}

inline double environmental_benefit(double recycled,
                                    const ScenarioParams& params) {
  const double qualifying = params.qualifying_fraction * recycled;
  return params.env_alpha * recycled + params.carbon_credit_price * qualifying;
}

inline double token_revenue(double recycled, double token_value) {
  return recycled * token_value;
}

// Canonical net benefit: token revenue + environmental benefit - operational
// cost. The subsidy enters exactly once, inside the operational cost.
inline double net_benefit_composed(double recycled, double token_value,
                                   double subsidy,
                                   const ScenarioParams& params) {
  return token_revenue(recycled, token_value) +
         environmental_benefit(recycled, params) -
         operational_cost(recycled, subsidy, params);
}

// Single-expression net benefit: unclamped participation and efficiency,
// linear waste W_0 + gamma*t, qualifying fraction implicitly 1. Cross-check
// for the composed form; the two agree when those assumptions hold.
inline double net_benefit_closed_form(double t, const ScenarioParams& params) {
  const double demand = params.demand_schedule.at(t);
  const double supply = params.token_supply_schedule.at(t);
  const double tv = token_value_from_market(demand, supply, t);
  const double utility =
      utility_at(tv, params.social_signal_schedule.at(t), params);
  const double adoption =
      params.p_max * (1.0 - std::exp(-params.adoption_rate * t)) * utility;
  const double efficiency = params.eta_0 + params.eta_growth * t;
  const double waste = params.w_0 + params.waste_linear_growth * t;
  const double margin =
      tv + params.env_alpha + params.carbon_credit_price - params.unit_cost;
  return adoption * efficiency * waste * margin - params.base_cost +
         params.subsidy_schedule.at(t);
}

// Token value at which the per-unit margin T_v + env_alpha + T_c - c_t is
// zero. Negative means non-token incentives alone already exceed the unit
// cost. This is a break-even point, not an interior optimum.
inline double break_even_token_value(const ScenarioParams& params) {
  return params.unit_cost - params.env_alpha - params.carbon_credit_price;
}

// Per-trial overrides sampled by the Monte Carlo layer. An unset field
// leaves the deterministic parameter or schedule in charge.
struct ParamOverrides {
  std::optional<double> token_value;   // replaces D(t)/S(t) at every point
  std::optional<double> p_max;         // replaces params.p_max
  std::optional<double> base_cost;     // replaces params.base_cost
  std::optional<double> carbon_credit_price;
};

inline std::vector<TrajectoryPoint> evaluate_trajectory(
    const ScenarioParams& params, const TimeGrid& grid, WasteMode waste_mode,
    std::span<const double> waste_path = {},
    const ParamOverrides& overrides = {}) {
  grid.validate();
  if (waste_mode == WasteMode::gbm && waste_path.size() != grid.size()) {
    throw ConfigError("waste_path", "length must equal grid size (" +
                                        std::to_string(grid.size()) + ")");
  }
  ScenarioParams effective = params;
  if (overrides.p_max) effective.p_max = *overrides.p_max;
  if (overrides.base_cost) effective.base_cost = *overrides.base_cost;
  if (overrides.carbon_credit_price) {
    effective.carbon_credit_price = *overrides.carbon_credit_price;
  }

  std::vector<TrajectoryPoint> points;
  points.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid.time_at(k);
    TrajectoryPoint pt;
    pt.t = t;

    const auto eff = efficiency_at(t, effective);
    pt.efficiency = eff.value;
    pt.efficiency_clamped = eff.clamped;

    if (overrides.token_value) {
      pt.token_value = *overrides.token_value;
    } else {
      pt.token_value = token_value_from_market(
          effective.demand_schedule.at(t),
          effective.token_supply_schedule.at(t), t);
    }

    pt.utility = utility_at(pt.token_value,
                            effective.social_signal_schedule.at(t), effective);

    const auto part = participation_at(t, pt.utility, effective);
    pt.participation = part.value;
    pt.participation_clamped = part.clamped;

    pt.waste = waste_mode == WasteMode::linear
                   ? effective.w_0 + effective.waste_linear_growth * t
                   : waste_path[k];

    pt.recycling_volume =
        recycling_volume(pt.participation, pt.efficiency, pt.waste);

    const double subsidy = effective.subsidy_schedule.at(t);
    pt.op_cost = operational_cost(pt.recycling_volume, subsidy, effective);
    pt.negative_op_cost = pt.op_cost < 0.0;
    pt.env_benefit = environmental_benefit(pt.recycling_volume, effective);
    pt.token_revenue = token_revenue(pt.recycling_volume, pt.token_value);
    pt.net_benefit = pt.token_revenue + pt.env_benefit - pt.op_cost;
    points.push_back(pt);
  }
  return points;
}

}  // namespace tokencycle
