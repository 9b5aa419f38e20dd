#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "tokencycle/errors.hpp"
#include "tokencycle/model.hpp"
#include "tokencycle/montecarlo.hpp"

namespace tokencycle {

// Central finite difference (f(x+h) - f(x-h)) / (2h). The step scales with
// |x| to avoid cancellation on large arguments.
template <typename F>
double central_difference(F&& f, double x, double h = 0.0) {
  if (h <= 0.0) {
    h = std::max(1e-6, 1e-6 * std::fabs(x));
  }
  const double up = f(x + h);
  const double down = f(x - h);
  if (!std::isfinite(up) || !std::isfinite(down)) {
    throw UsageError("central_difference: non-finite function value");
  }
  return (up - down) / (2.0 * h);
}

namespace detail {

// Unclamped adoption response at the base (schedule-driven) token value.
inline double raw_adoption(double t, const ScenarioParams& p) {
  const double tv = token_value_from_market(p.demand_schedule.at(t),
                                            p.token_supply_schedule.at(t), t);
  const double u = utility_at(tv, p.social_signal_schedule.at(t), p);
  return p.p_max * (1.0 - std::exp(-p.adoption_rate * t)) * u;
}

inline double linear_waste(double t, const ScenarioParams& p) {
  return p.w_0 + p.waste_linear_growth * t;
}

}  // namespace detail

// The displayed-form net benefit with one scalar freed for differentiation.
// The utility channel stays fixed at the schedule-driven token value, the
// participation and efficiency factors are unclamped, the waste term is
// linear, and the qualifying fraction is implicitly 1.
struct ReferenceModeVars {
  std::optional<double> token_value;  // bracket token value only
  std::optional<double> unit_cost;
  std::optional<double> carbon_credit_price;
  std::optional<double> subsidy;
};

inline double net_benefit_reference_mode(
    double t, const ScenarioParams& p, const ReferenceModeVars& vars = {}) {
  const double base_tv = token_value_from_market(
      p.demand_schedule.at(t), p.token_supply_schedule.at(t), t);
  const double tv = vars.token_value.value_or(base_tv);
  const double ct = vars.unit_cost.value_or(p.unit_cost);
  const double tc = vars.carbon_credit_price.value_or(p.carbon_credit_price);
  const double subsidy = vars.subsidy.value_or(p.subsidy_schedule.at(t));
  const double efficiency = p.eta_0 + p.eta_growth * t;
  const double margin = tv + p.env_alpha + tc - ct;
  return detail::raw_adoption(t, p) * efficiency * detail::linear_waste(t, p) *
             margin -
         p.base_cost + subsidy;
}

// Composed-model evaluation of a single time point with linear waste.
// token_value_override feeds both the utility and the revenue bracket.
struct ComposedPointVars {
  std::optional<double> token_value;
  std::optional<double> carbon_credit_price;
  std::optional<double> subsidy;
};

inline TrajectoryPoint evaluate_point(double t, const ScenarioParams& params,
                                      const ComposedPointVars& vars = {}) {
  ScenarioParams p = params;
  if (vars.carbon_credit_price) {
    p.carbon_credit_price = *vars.carbon_credit_price;
  }
  TrajectoryPoint pt;
  pt.t = t;
  const auto eff = efficiency_at(t, p);
  pt.efficiency = eff.value;
  pt.efficiency_clamped = eff.clamped;
  pt.token_value = vars.token_value
                       ? *vars.token_value
                       : token_value_from_market(p.demand_schedule.at(t),
                                                 p.token_supply_schedule.at(t),
                                                 t);
  pt.utility = utility_at(pt.token_value, p.social_signal_schedule.at(t), p);
  const auto part = participation_at(t, pt.utility, p);
  pt.participation = part.value;
  pt.participation_clamped = part.clamped;
  pt.waste = detail::linear_waste(t, p);
  pt.recycling_volume =
      recycling_volume(pt.participation, pt.efficiency, pt.waste);
  const double subsidy = vars.subsidy.value_or(p.subsidy_schedule.at(t));
  pt.op_cost = operational_cost(pt.recycling_volume, subsidy, p);
  pt.negative_op_cost = pt.op_cost < 0.0;
  pt.env_benefit = environmental_benefit(pt.recycling_volume, p);
  pt.token_revenue = token_revenue(pt.recycling_volume, pt.token_value);
  pt.net_benefit = pt.token_revenue + pt.env_benefit - pt.op_cost;
  return pt;
}

// dN_b/dT_v with the utility channel fixed: the displayed-form recycling
// volume itself.
inline double partial_wrt_token_value(double t, const ScenarioParams& p) {
  return detail::raw_adoption(t, p) * (p.eta_0 + p.eta_growth * t) *
         detail::linear_waste(t, p);
}

inline double partial_wrt_unit_cost(double t, const ScenarioParams& p) {
  return -partial_wrt_token_value(t, p);
}

// Reference mode treats every recycled unit as qualifying (q = 1); the
// composed model's true partial scales by the qualifying fraction.
inline double partial_wrt_carbon_credit_reference(double t,
                                                  const ScenarioParams& p) {
  return partial_wrt_token_value(t, p);
}

inline double partial_wrt_carbon_credit_composed(double t,
                                                 const ScenarioParams& p) {
  return p.qualifying_fraction * evaluate_point(t, p).recycling_volume;
}

inline double partial_wrt_subsidy(double, const ScenarioParams&) {
  return 1.0;
}

// Total derivative dN_b/dT_v of the composed model: the token value also
// moves utility, hence participation, unless the participation clamp is
// pinned. Piecewise form; undefined exactly at a clamp boundary.
inline double full_partial_wrt_token_value(double t, const ScenarioParams& p) {
  const TrajectoryPoint pt = evaluate_point(t, p);
  const double margin = pt.token_value + p.env_alpha +
                        p.qualifying_fraction * p.carbon_credit_price -
                        p.unit_cost;
  double dparticipation = 0.0;
  if (!pt.participation_clamped) {
    dparticipation = p.p_max * (1.0 - std::exp(-p.adoption_rate * t)) *
                     p.alpha_financial;
  }
  return pt.recycling_volume +
         dparticipation * pt.efficiency * pt.waste * margin;
}

enum class SensitivityMode { reference, composed, full };

inline const char* to_string(SensitivityMode m) {
  switch (m) {
    case SensitivityMode::reference: return "reference";
    case SensitivityMode::composed: return "composed";
    case SensitivityMode::full: return "full";
  }
  return "?";
}

struct SensitivityRow {
  std::string parameter;
  SensitivityMode mode;
  double analytic;
  double finite_difference;
  double relative_error;  // |analytic - fd| / max(1, |analytic|)
  double t;
};

inline SensitivityRow make_row(std::string parameter, SensitivityMode mode,
                               double analytic, double fd, double t) {
  const double rel =
      std::fabs(analytic - fd) / std::max(1.0, std::fabs(analytic));
  return {std::move(parameter), mode, analytic, fd, rel, t};
}

// The four displayed partials checked against central differences of the
// matching-mode net benefit, plus the composed-mode carbon-credit partial
// and the full (total-derivative) token-value sensitivity.
inline std::vector<SensitivityRow> sensitivity_report(
    double t, const ScenarioParams& params) {
  std::vector<SensitivityRow> rows;
  const double base_tv = token_value_from_market(
      params.demand_schedule.at(t), params.token_supply_schedule.at(t), t);

  auto reference_fd = [&](auto assign, double x0) {
    return central_difference(
        [&](double x) {
          ReferenceModeVars v;
          assign(v, x);
          return net_benefit_reference_mode(t, params, v);
        },
        x0);
  };

  rows.push_back(make_row(
      "token_value", SensitivityMode::reference,
      partial_wrt_token_value(t, params),
      reference_fd([](ReferenceModeVars& v, double x) { v.token_value = x; },
                   base_tv),
      t));
  rows.push_back(make_row(
      "unit_cost", SensitivityMode::reference, partial_wrt_unit_cost(t, params),
      reference_fd([](ReferenceModeVars& v, double x) { v.unit_cost = x; },
                   params.unit_cost),
      t));
  rows.push_back(make_row(
      "carbon_credit_price", SensitivityMode::reference,
      partial_wrt_carbon_credit_reference(t, params),
      reference_fd(
          [](ReferenceModeVars& v, double x) { v.carbon_credit_price = x; },
          params.carbon_credit_price),
      t));
  rows.push_back(make_row(
      "carbon_credit_price", SensitivityMode::composed,
      partial_wrt_carbon_credit_composed(t, params),
      central_difference(
          [&](double x) {
            ComposedPointVars v;
            v.carbon_credit_price = x;
            return evaluate_point(t, params, v).net_benefit;
          },
          params.carbon_credit_price),
      t));
  // Subsidy enters exactly linearly, so the step is scaled to the output
  // magnitude; a tiny step would only surface cancellation noise.
  const double subsidy0 = params.subsidy_schedule.at(t);
  const double subsidy_h =
      std::max(1.0, 1e-3 * std::fabs(net_benefit_reference_mode(t, params)));
  rows.push_back(make_row(
      "subsidy", SensitivityMode::reference, partial_wrt_subsidy(t, params),
      central_difference(
          [&](double x) {
            ReferenceModeVars v;
            v.subsidy = x;
            return net_benefit_reference_mode(t, params, v);
          },
          subsidy0, subsidy_h),
      t));
  rows.push_back(make_row(
      "token_value", SensitivityMode::full,
      full_partial_wrt_token_value(t, params),
      central_difference(
          [&](double x) {
            ComposedPointVars v;
            v.token_value = x;
            return evaluate_point(t, params, v).net_benefit;
          },
          base_tv),
      t));
  return rows;
}

// ---------------------------------------------------------------------------
// One-dimensional parameter sweeps with common random numbers.

inline const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> names = {
      "unit_cost", "carbon_credit_price", "subsidy", "env_alpha",
      "token_value_mean"};
  return names;
}

// Re-centers a distribution on a new mean, keeping its shape. Lognormals
// keep their natural-space sd.
inline DistributionSpec shift_distribution_mean(const DistributionSpec& spec,
                                                double target_mean) {
  switch (spec.kind) {
    case DistributionKind::constant:
      return DistributionSpec::constant(target_mean);
    case DistributionKind::normal: {
      DistributionSpec s = spec;
      s.a = target_mean;
      return s;
    }
    case DistributionKind::lognormal: {
      const auto [mean, sd] = lognormal_natural_moments(spec);
      (void)mean;
      DistributionSpec s = lognormal_from_natural_moments(target_mean, sd);
      s.clamp = spec.clamp;
      return s;
    }
    default:
      throw UsageError(
          "cannot re-center a beta/scaled-beta distribution on a mean");
  }
}

inline MonteCarloScenario apply_sweep_value(const MonteCarloScenario& base,
                                            const std::string& parameter,
                                            double value) {
  MonteCarloScenario s = base;
  if (parameter == "unit_cost") {
    s.params.unit_cost = value;
  } else if (parameter == "env_alpha") {
    s.params.env_alpha = value;
  } else if (parameter == "carbon_credit_price") {
    if (s.stochastic_inputs.carbon_credit_price) {
      s.stochastic_inputs.carbon_credit_price = shift_distribution_mean(
          *s.stochastic_inputs.carbon_credit_price, value);
    } else {
      s.params.carbon_credit_price = value;
    }
  } else if (parameter == "subsidy") {
    s.params.subsidy_schedule = Schedule::constant(value);
  } else if (parameter == "token_value_mean") {
    if (!s.stochastic_inputs.token_value) {
      throw UsageError(
          "token_value_mean sweep needs a stochastic token_value input");
    }
    s.stochastic_inputs.token_value =
        shift_distribution_mean(*s.stochastic_inputs.token_value, value);
  } else {
    std::string valid;
    for (const auto& n : sweepable_parameters()) {
      valid += valid.empty() ? n : ", " + n;
    }
    throw UsageError("unknown sweep parameter '" + parameter +
                     "' (valid: " + valid + ")");
  }
  return s;
}

struct SweepPoint {
  double value;
  MonteCarloSummary summary;
};

// Every sweep point reuses the same master seed, so differences between
// points reflect the parameter rather than sampling noise.
inline std::vector<SweepPoint> sweep(const MonteCarloScenario& scenario,
                                     const std::string& parameter,
                                     const std::vector<double>& values,
                                     long long n_trials,
                                     std::uint64_t master_seed,
                                     unsigned workers = 1) {
  std::vector<SweepPoint> table;
  table.reserve(values.size());
  for (double v : values) {
    const MonteCarloScenario point = apply_sweep_value(scenario, parameter, v);
    auto result = run_monte_carlo(point, n_trials, master_seed, workers);
    table.push_back(SweepPoint{v, std::move(result.summary)});
  }
  return table;
}

}  // namespace tokencycle
