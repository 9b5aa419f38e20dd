// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Each criterion carries a wall-clock budget that is part
// of the pass condition.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tokencycle/tokencycle.hpp"

using namespace tokencycle;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = SCENARIO_DIR;

int g_failures = 0;
int g_index = 0;

void criterion(const std::string& name, double budget_seconds,
               const std::function<bool(std::string&)>& body) {
  ++g_index;
  std::string detail;
  bool ok = false;
  const auto start = std::chrono::steady_clock::now();
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
    ok = false;
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (elapsed >= budget_seconds) {
    ok = false;
    detail += (detail.empty() ? "" : "; ") + std::string("over time budget");
  }
  if (!ok) ++g_failures;
  std::printf("%s  %d  %-38s  [%5.2fs/%gs]  %s\n", ok ? "PASS" : "FAIL",
              g_index, name.c_str(), elapsed, budget_seconds, detail.c_str());
  std::fflush(stdout);
}

double uniform(RandomStream& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.next_uniform();
}

// Randomized parameter set with q = 1, linear waste, clamps inactive at t.
std::pair<ScenarioParams, double> random_identity_case(RandomStream& rng,
                                                       bool unit_q) {
  for (;;) {
    ScenarioParams p;
    p.p_max = uniform(rng, 0.1, 1.0);
    p.adoption_rate = uniform(rng, 0.01, 2.0);
    p.alpha_financial = uniform(rng, 0.0, 0.3);
    p.alpha_social = uniform(rng, 0.0, 0.3);
    p.eta_0 = uniform(rng, 0.05, 0.6);
    p.eta_growth = uniform(rng, 0.0, 0.02);
    p.w_0 = uniform(rng, 100.0, 10000.0);
    p.waste_linear_growth = uniform(rng, 0.0, 100.0);
    p.base_cost = uniform(rng, 0.0, 1000.0);
    p.unit_cost = uniform(rng, 0.0, 5.0);
    p.env_alpha = uniform(rng, 0.0, 3.0);
    p.carbon_credit_price = uniform(rng, 0.0, 3.0);
    p.qualifying_fraction = unit_q ? 1.0 : uniform(rng, 0.1, 1.0);
    p.subsidy_schedule = Schedule::constant(uniform(rng, 0.0, 500.0));
    p.demand_schedule = Schedule::constant(uniform(rng, 0.1, 5.0));
    p.token_supply_schedule = Schedule::constant(uniform(rng, 0.5, 2.0));
    p.social_signal_schedule = Schedule::constant(uniform(rng, 0.0, 2.0));
    const double t = uniform(rng, 0.1, 20.0);

    const double tv = p.demand_schedule.at(t) / p.token_supply_schedule.at(t);
    const double u = utility_at(tv, p.social_signal_schedule.at(t), p);
    const double raw_p =
        p.p_max * (1.0 - std::exp(-p.adoption_rate * t)) * u;
    const double raw_e = p.eta_0 + p.eta_growth * t;
    if (raw_p > 0.01 && raw_p < 0.95 && raw_e > 0.01 && raw_e < 0.95) {
      return {p, t};
    }
  }
}

double composed_at(const ScenarioParams& p, double t) {
  const double tv = token_value_from_market(
      p.demand_schedule.at(t), p.token_supply_schedule.at(t), t);
  const double u = utility_at(tv, p.social_signal_schedule.at(t), p);
  const double participation = participation_at(t, u, p).value;
  const double efficiency = efficiency_at(t, p).value;
  const double waste = p.w_0 + p.waste_linear_growth * t;
  const double recycled = recycling_volume(participation, efficiency, waste);
  return net_benefit_composed(recycled, tv, p.subsidy_schedule.at(t), p);
}

// Independent naive statistics oracle: plain loops over a sorted copy.
struct OracleSummary {
  double mean, std_, min_, max_, p5, p50, p95;
};

OracleSummary oracle_summarize(const std::vector<double>& xs) {
  OracleSummary o{};
  const std::size_t n = xs.size();
  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  o.min_ = sorted.front();
  o.max_ = sorted.back();
  if (sorted.front() == sorted.back()) {
    o.mean = sorted.front();
  } else {
    // mean and std run over the sample in its given order
    double s = 0.0;
    for (double x : xs) s += x;
    o.mean = s / static_cast<double>(n);
  }
  if (n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - o.mean) * (x - o.mean);
    o.std_ = std::sqrt(ss / static_cast<double>(n - 1));
  }
  auto pct = [&](double p) {
    const double h = static_cast<double>(n - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= n) return sorted[n - 1];
    return sorted[lo] +
           (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
  };
  o.p5 = pct(0.05);
  o.p50 = pct(0.50);
  o.p95 = pct(0.95);
  return o;
}

std::vector<long long> oracle_histogram(const std::vector<double>& xs,
                                        long long n_bins, double lo,
                                        double hi) {
  std::vector<long long> counts(
      lo == hi ? 1 : static_cast<std::size_t>(n_bins), 0);
  if (lo == hi) {
    counts[0] = static_cast<long long>(xs.size());
    return counts;
  }
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (double x : xs) {
    long long idx = 0;
    while (idx + 1 < n_bins && x >= lo + width * static_cast<double>(idx + 1)) {
      ++idx;
    }
    ++counts[static_cast<std::size_t>(idx)];
  }
  return counts;
}

std::string run_summary_bytes(const MonteCarloResult& r) {
  return summary_to_json(r.summary).dump(2);
}

}  // namespace

int main() {
  std::printf("acceptance suite (scenarios: %s)\n", kScenarios.c_str());

  criterion("subsidy-model reproduction", 1.0, [](std::string& detail) {
    SubsidyComparativeConfig cfg;  // P=0.5, V=1000, reward=10, N(50000,1000)
    const long long n = 10000;
    std::vector<double> nets;
    nets.reserve(n);
    for (long long i = 0; i < n; ++i) {
      nets.push_back(subsidy_trial(cfg, derive_stream(1001, i), i).net_benefit);
    }
    const double mean = sample_mean(nets);
    detail = "mean=" + format_double(mean) + " band=-45000+/-30";
    return std::fabs(mean - (-45000.0)) < 30.0;
  });

  criterion("tokenized-model calibration", 10.0, [](std::string& detail) {
    TokenizedComparativeConfig base;
    const CalibrationResult cal =
        calibrate_tokenized(base, 67501.0, 10000, 20240601);
    const ScenarioFile committed =
        load_scenario(kScenarios / "comparative_tokenized.scenario");
    if (!committed.tokenized) {
      detail = "committed scenario is not a tokenized model";
      return false;
    }
    std::vector<double> nets;
    for (long long i = 0; i < 10000; ++i) {
      nets.push_back(
          tokenized_trial(*committed.tokenized, derive_stream(1, i), i)
              .net_benefit);
    }
    const double committed_mean = sample_mean(nets);
    detail = "calibrated(sd=" + format_double(cal.natural_sd) +
             ", beta=" + format_double(cal.beta) +
             ", residual=" + format_double(cal.residual) +
             "); committed mean=" + format_double(committed_mean);
    return cal.residual <= 0.01 * 67501.0 &&
           std::fabs(committed_mean - 67501.0) <= 0.10 * 67501.0;
  });

  criterion("net-benefit algebraic identity", 1.0, [](std::string& detail) {
    RandomStream rng(31415, 0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const auto [params, t] = random_identity_case(rng, true);
      const double closed = net_benefit_closed_form(t, params);
      const double composed = composed_at(params, t);
      const double rel =
          std::fabs(closed - composed) / std::max(1.0, std::fabs(closed));
      worst = std::max(worst, rel);
    }
    detail = "worst relative gap=" + format_double(worst);
    return worst <= 1e-9;
  });

  criterion("sensitivity verification", 1.0, [](std::string& detail) {
    RandomStream rng(2718, 0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const auto [params, t] = random_identity_case(rng, false);
      for (const auto& row : sensitivity_report(t, params)) {
        worst = std::max(worst, row.relative_error);
        if (row.parameter == "subsidy" && row.analytic != 1.0) {
          detail = "subsidy partial is not 1";
          return false;
        }
      }
    }
    // Exact subsidy shift, on a parameter set whose terms are all exactly
    // representable (exact equality of doubles needs representable sums).
    ScenarioParams p;
    p.p_max = 0.5;
    p.adoption_rate = 1e9;
    p.alpha_financial = 0.0;
    p.alpha_social = 1.0;
    p.social_signal_schedule = Schedule::constant(1.0);
    p.eta_0 = 0.5;
    p.w_0 = 1000.0;
    p.demand_schedule = Schedule::constant(2.0);
    p.token_supply_schedule = Schedule::constant(1.0);
    p.base_cost = 100.0;
    for (double delta : {1.0, 100.0, -50.0}) {
      ReferenceModeVars lo, hi;
      lo.subsidy = 10.0;
      hi.subsidy = 10.0 + delta;
      if (net_benefit_reference_mode(4.0, p, hi) -
              net_benefit_reference_mode(4.0, p, lo) !=
          delta) {
        detail = "subsidy shift not exact";
        return false;
      }
    }
    detail = "worst relative error=" + format_double(worst);
    return worst <= 1e-6;
  });

  criterion("gbm moment convergence", 5.0, [](std::string& detail) {
    const int paths = 50000;
    TimeGrid grid{0.0, 0.02, 50};  // T = 1
    std::vector<double> terminal(paths);
    for (int i = 0; i < paths; ++i) {
      RandomStream s = derive_stream(777, static_cast<std::uint64_t>(i));
      const auto path = gbm_path(100.0, 0.1, 0.2, grid, s);
      for (double w : path) {
        if (!(w > 0.0)) {
          detail = "non-positive path value";
          return false;
        }
      }
      terminal[i] = path.back();
    }
    double s = 0.0;
    for (double x : terminal) s += x;
    const double mean = s / paths;
    double ss = 0.0;
    for (double x : terminal) ss += (x - mean) * (x - mean);
    const double se = std::sqrt(ss / (paths - 1)) / std::sqrt(double(paths));
    const double expected = 100.0 * std::exp(0.1);
    detail = "mean=" + format_double(mean) + " expected=" +
             format_double(expected) + " 3se=" + format_double(3.0 * se);
    return std::fabs(mean - expected) < 3.0 * se;
  });

  criterion("determinism under parallelism", 5.0, [](std::string& detail) {
    const ScenarioFile file = load_scenario(kScenarios / "headline.scenario");
    std::string trials_ref, summary_ref;
    for (unsigned workers : {1u, 2u, 8u}) {
      const auto result =
          run_monte_carlo(file.scenario, 10000, 424242, workers);
      const std::string trials = trials_csv(result.outcomes);
      const std::string summary = run_summary_bytes(result);
      if (workers == 1u) {
        trials_ref = trials;
        summary_ref = summary;
      } else if (trials != trials_ref || summary != summary_ref) {
        detail = "workers=" + std::to_string(workers) + " diverged";
        return false;
      }
    }
    detail = "trials.csv and summary identical for workers {1,2,8}";
    return true;
  });

  criterion("percentile/histogram oracle", 1.0, [](std::string& detail) {
    RandomStream rng(1618, 0);
    for (int rep = 0; rep < 500; ++rep) {
      const int n = 1 + static_cast<int>(rng.next_uniform() * 1000);
      std::vector<double> xs(n);
      if (rep % 25 == 0) {
        std::fill(xs.begin(), xs.end(), rng.next_normal());
      } else {
        for (double& x : xs) x = rng.next_normal() * 1000.0;
      }
      const auto s = summarize(xs, 13);
      const auto o = oracle_summarize(xs);
      if (s.mean != o.mean || s.min != o.min_ || s.max != o.max_ ||
          s.p5 != o.p5 || s.p50 != o.p50 || s.p95 != o.p95 ||
          (s.n > 1 && s.sample_std != o.std_)) {
        detail = "summary mismatch at rep " + std::to_string(rep);
        return false;
      }
      const auto counts = oracle_histogram(xs, 13, o.min_, o.max_);
      if (counts.size() != s.histogram.size()) {
        detail = "bin count mismatch at rep " + std::to_string(rep);
        return false;
      }
      for (std::size_t b = 0; b < counts.size(); ++b) {
        if (counts[b] != s.histogram[b].count) {
          detail = "bin " + std::to_string(b) + " mismatch at rep " +
                   std::to_string(rep);
          return false;
        }
      }
    }
    detail = "500 samples matched exactly";
    return true;
  });

  criterion("headline-scenario envelope", 5.0, [](std::string& detail) {
    const ScenarioFile file = load_scenario(kScenarios / "headline.scenario");
    const auto result = run_monte_carlo(file.scenario, 10000, 1, 2);
    detail = "mean=" + format_double(result.summary.mean) +
             " p5=" + format_double(result.summary.p5) +
             " p95=" + format_double(result.summary.p95);
    return result.summary.p5 > 0.0 && result.summary.mean >= 1079.49 &&
           result.summary.mean <= 12485.1;
  });

  criterion("degenerate-distribution equivalence", 1.0, [](std::string& detail) {
    MonteCarloScenario s;
    s.params.p_max = 0.5;
    s.params.adoption_rate = 0.37;
    s.params.alpha_financial = 0.21;
    s.params.alpha_social = 0.4;
    s.params.social_signal_schedule = Schedule::constant(0.63);
    s.params.eta_0 = 0.41;
    s.params.eta_growth = 0.013;
    s.params.w_0 = 5123.0;
    s.params.waste_linear_growth = 83.1;
    s.params.unit_cost = 0.73;
    s.params.env_alpha = 0.51;
    s.params.qualifying_fraction = 0.77;
    s.params.subsidy_schedule = Schedule::constant(311.7);
    s.grid = TimeGrid{0.0, 1.0, 10};
    s.stochastic_inputs.token_value = DistributionSpec::constant(2.13);
    s.stochastic_inputs.participation_base = DistributionSpec::constant(0.47);
    s.stochastic_inputs.base_cost = DistributionSpec::constant(931.4);
    s.stochastic_inputs.carbon_credit_price = DistributionSpec::constant(1.19);

    ScenarioParams p = s.params;
    p.p_max = 0.47;
    p.base_cost = 931.4;
    p.carbon_credit_price = 1.19;
    ParamOverrides ov;
    ov.token_value = 2.13;
    const double expected =
        evaluate_trajectory(p, s.grid, WasteMode::linear, {}, ov)
            .back()
            .net_benefit;

    const auto result = run_monte_carlo(s, 5000, 7, 2);
    detail = "mean=" + format_double(result.summary.mean) +
             " deterministic=" + format_double(expected) +
             " std=" + format_double(result.summary.sample_std);
    return result.summary.mean == expected &&
           result.summary.sample_std == 0.0;
  });

  std::printf("%d/%d criteria passed\n", g_index - g_failures, g_index);
  return g_failures == 0 ? 0 : 1;
}
