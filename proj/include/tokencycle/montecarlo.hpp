#pragma once

#include <atomic>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "tokencycle/distributions.hpp"
#include "tokencycle/gbm.hpp"
#include "tokencycle/model.hpp"
#include "tokencycle/random.hpp"
#include "tokencycle/statistics.hpp"

namespace tokencycle {

// Per-trial static draws. Names map onto the parameter they replace:
//   token_value          -> the market token value D(t)/S(t), whole horizon
//   participation_base   -> params.p_max
//   base_cost            -> params.base_cost
//   carbon_credit_price  -> params.carbon_credit_price
// Draw order within a trial is fixed to the order above (absent inputs are
// skipped), followed by the GBM waste path when waste_mode is gbm. Constant
// specs consume no draws.
struct StochasticInputs {
  std::optional<DistributionSpec> token_value;
  std::optional<DistributionSpec> participation_base;
  std::optional<DistributionSpec> base_cost;
  std::optional<DistributionSpec> carbon_credit_price;

  static constexpr const char* kNames[4] = {
      "token_value", "participation_base", "base_cost", "carbon_credit_price"};

  const std::optional<DistributionSpec>& by_index(int i) const {
    switch (i) {
      case 0: return token_value;
      case 1: return participation_base;
      case 2: return base_cost;
      default: return carbon_credit_price;
    }
  }

  std::optional<DistributionSpec>& by_index(int i) {
    return const_cast<std::optional<DistributionSpec>&>(
        static_cast<const StochasticInputs*>(this)->by_index(i));
  }

  // Negative cost or carbon-credit draws are economically meaningless, so
  // those inputs carry an implicit clamp at zero unless the spec sets its
  // own. Clamp events still count.
  DistributionSpec effective(int i) const {
    DistributionSpec spec = *by_index(i);
    if ((i == 2 || i == 3) && !spec.clamp) {
      spec.clamp = ClampBounds{0.0, std::numeric_limits<double>::infinity()};
    }
    return spec;
  }

  void validate(const std::string& field) const {
    for (int i = 0; i < 4; ++i) {
      if (by_index(i)) {
        by_index(i)->validate(field + "." + kNames[i]);
      }
    }
  }
};

enum class HorizonAggregation { terminal, sum_over_grid };

struct MonteCarloScenario {
  ScenarioParams params;
  TimeGrid grid;
  WasteMode waste_mode = WasteMode::linear;
  StochasticInputs stochastic_inputs;
  HorizonAggregation horizon_aggregation = HorizonAggregation::terminal;

  void validate() const {
    params.validate("params");
    grid.validate("grid");
    stochastic_inputs.validate("stochastic_inputs");
  }
};

struct TrialOutcome {
  long long trial_index = 0;
  double net_benefit = 0.0;
  double recycling_volume = 0.0;
  double token_revenue = 0.0;
  double op_cost = 0.0;
  double env_benefit = 0.0;
  std::vector<std::pair<std::string, double>> sampled_values;
  long long clamp_count = 0;
};

inline TrialOutcome run_trial(const MonteCarloScenario& scenario,
                              RandomStream stream,
                              long long trial_index = 0) {
  TrialOutcome out;
  out.trial_index = trial_index;

  ParamOverrides overrides;
  for (int i = 0; i < 4; ++i) {
    if (!scenario.stochastic_inputs.by_index(i)) continue;
    const DistributionSpec spec = scenario.stochastic_inputs.effective(i);
    const double v = sample(spec, stream, out.clamp_count);
    out.sampled_values.emplace_back(StochasticInputs::kNames[i], v);
    switch (i) {
      case 0: overrides.token_value = v; break;
      case 1: overrides.p_max = v; break;
      case 2: overrides.base_cost = v; break;
      default: overrides.carbon_credit_price = v; break;
    }
  }

  std::vector<double> waste_path;
  if (scenario.waste_mode == WasteMode::gbm) {
    waste_path = gbm_path(scenario.params.w_0, scenario.params.waste_drift,
                          scenario.params.waste_volatility, scenario.grid,
                          stream);
  }

  std::vector<TrajectoryPoint> traj;
  try {
    traj = evaluate_trajectory(scenario.params, scenario.grid,
                               scenario.waste_mode, waste_path, overrides);
  } catch (const DomainError& e) {
    throw DomainError(e.t(), trial_index, e.what());
  }

  if (scenario.horizon_aggregation == HorizonAggregation::terminal) {
    const TrajectoryPoint& last = traj.back();
    out.net_benefit = last.net_benefit;
    out.recycling_volume = last.recycling_volume;
    out.token_revenue = last.token_revenue;
    out.op_cost = last.op_cost;
    out.env_benefit = last.env_benefit;
  } else {
    for (const TrajectoryPoint& pt : traj) {
      out.net_benefit += pt.net_benefit;
      out.recycling_volume += pt.recycling_volume;
      out.token_revenue += pt.token_revenue;
      out.op_cost += pt.op_cost;
      out.env_benefit += pt.env_benefit;
    }
  }
  for (const TrajectoryPoint& pt : traj) {
    out.clamp_count += (pt.participation_clamped ? 1 : 0) +
                       (pt.efficiency_clamped ? 1 : 0);
  }
  return out;
}

struct MonteCarloResult {
  std::vector<TrialOutcome> outcomes;
  MonteCarloSummary summary;
};

// Trial i always uses derive_stream(master_seed, i), and aggregation runs
// over outcomes in trial order, so the result is identical for any worker
// count or scheduling. A failing trial aborts the run; when several fail,
// the lowest trial index is reported.
inline MonteCarloResult run_monte_carlo(const MonteCarloScenario& scenario,
                                        long long n_trials,
                                        std::uint64_t master_seed,
                                        unsigned workers = 1,
                                        long long histogram_bins = 30) {
  if (n_trials < 1) {
    throw UsageError("n_trials must be >= 1");
  }
  scenario.validate();
  if (workers < 1) workers = 1;
  workers = static_cast<unsigned>(
      std::min<long long>(workers, n_trials));

  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(n_trials));

  struct Failure {
    long long trial_index;
    std::exception_ptr error;
  };
  std::vector<std::optional<Failure>> failures(workers);

  auto run_range = [&](unsigned worker, long long lo, long long hi) {
    for (long long i = lo; i < hi; ++i) {
      try {
        outcomes[static_cast<std::size_t>(i)] =
            run_trial(scenario, derive_stream(master_seed,
                                              static_cast<std::uint64_t>(i)),
                      i);
      } catch (...) {
        failures[worker] = Failure{i, std::current_exception()};
        return;
      }
    }
  };

  if (workers == 1) {
    run_range(0, 0, n_trials);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const long long chunk = (n_trials + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const long long lo = static_cast<long long>(w) * chunk;
      const long long hi = std::min(n_trials, lo + chunk);
      pool.emplace_back(run_range, w, lo, hi);
    }
    for (auto& th : pool) {
      th.join();
    }
  }

  const Failure* first = nullptr;
  for (const auto& f : failures) {
    if (f && (!first || f->trial_index < first->trial_index)) {
      first = &*f;
    }
  }
  if (first) {
    std::rethrow_exception(first->error);
  }

  std::vector<double> nets;
  nets.reserve(outcomes.size());
  long long clamps = 0;
  for (const TrialOutcome& o : outcomes) {
    nets.push_back(o.net_benefit);
    clamps += o.clamp_count;
  }
  MonteCarloSummary summary = summarize(nets, histogram_bins);
  summary.total_clamp_events = clamps;
  return {std::move(outcomes), std::move(summary)};
}

}  // namespace tokencycle
