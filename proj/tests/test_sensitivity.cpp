#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tokencycle/random.hpp"
#include "tokencycle/sensitivity.hpp"

using namespace tokencycle;

namespace {

// Moderate parameters with clamps provably inactive at the probe time.
struct Probe {
  ScenarioParams params;
  double t;
};

Probe random_probe(RandomStream& rng) {
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * rng.next_uniform();
  };
  for (;;) {
    ScenarioParams p;
    p.p_max = uniform(0.1, 1.0);
    p.adoption_rate = uniform(0.01, 1.5);
    p.alpha_financial = uniform(0.0, 0.25);
    p.alpha_social = uniform(0.0, 0.25);
    p.eta_0 = uniform(0.05, 0.6);
    p.eta_growth = uniform(0.0, 0.02);
    p.w_0 = uniform(100.0, 10000.0);
    p.waste_linear_growth = uniform(0.0, 100.0);
    p.base_cost = uniform(0.0, 1000.0);
    p.unit_cost = uniform(0.0, 5.0);
    p.env_alpha = uniform(0.0, 3.0);
    p.carbon_credit_price = uniform(0.0, 3.0);
    p.qualifying_fraction = uniform(0.1, 1.0);
    p.subsidy_schedule = Schedule::constant(uniform(0.0, 500.0));
    p.demand_schedule = Schedule::constant(uniform(0.1, 5.0));
    p.token_supply_schedule = Schedule::constant(uniform(0.5, 2.0));
    p.social_signal_schedule = Schedule::constant(uniform(0.0, 2.0));
    const double t = uniform(0.1, 20.0);

    const auto pt = evaluate_point(t, p);
    // Keep some distance from the clamp boundaries so finite differences
    // never straddle a kink.
    const double raw_participation =
        p.p_max * (1.0 - std::exp(-p.adoption_rate * t)) * pt.utility;
    const double raw_efficiency = p.eta_0 + p.eta_growth * t;
    if (raw_participation > 0.01 && raw_participation < 0.95 &&
        raw_efficiency > 0.01 && raw_efficiency < 0.95) {
      return {p, t};
    }
  }
}

}  // namespace

TEST_CASE("central_difference") {
  SECTION("quadratic") {
    const double d =
        central_difference([](double x) { return x * x; }, 3.0, 1e-6);
    REQUIRE_THAT(d, Catch::Matchers::WithinAbs(6.0, 1e-6));
  }
  SECTION("constant") {
    const double d = central_difference([](double) { return 5.5; }, 1.0);
    REQUIRE(d == 0.0);
  }
  SECTION("linear") {
    const double d =
        central_difference([](double x) { return 2.5 * x + 7.0; }, 10.0);
    REQUIRE_THAT(d, Catch::Matchers::WithinRel(2.5, 1e-9));
  }
  SECTION("non-finite values rejected") {
    REQUIRE_THROWS_AS(
        central_difference([](double x) { return std::log(x); }, 0.0, 1e-3),
        UsageError);
  }
}

TEST_CASE("partials vanish with the participation factor at t=0") {
  ScenarioParams p;
  p.adoption_rate = 0.8;
  REQUIRE(partial_wrt_token_value(0.0, p) == 0.0);
  REQUIRE(partial_wrt_unit_cost(0.0, p) == 0.0);
  REQUIRE(partial_wrt_carbon_credit_reference(0.0, p) == 0.0);
}

TEST_CASE("unit-cost partial is the negated token-value partial") {
  RandomStream rng(404, 0);
  for (int i = 0; i < 100; ++i) {
    const Probe probe = random_probe(rng);
    REQUIRE(partial_wrt_unit_cost(probe.t, probe.params) ==
            -partial_wrt_token_value(probe.t, probe.params));
  }
}

TEST_CASE("carbon-credit partial equals the token-value partial (reference mode)") {
  RandomStream rng(405, 0);
  for (int i = 0; i < 100; ++i) {
    const Probe probe = random_probe(rng);
    REQUIRE(partial_wrt_carbon_credit_reference(probe.t, probe.params) ==
            partial_wrt_token_value(probe.t, probe.params));
  }
}

TEST_CASE("composed carbon-credit partial scales with the qualifying fraction") {
  RandomStream rng(406, 0);
  for (int i = 0; i < 50; ++i) {
    Probe probe = random_probe(rng);
    probe.params.qualifying_fraction = 1.0;
    const double full = partial_wrt_carbon_credit_composed(probe.t, probe.params);
    probe.params.qualifying_fraction = 0.5;
    const double half = partial_wrt_carbon_credit_composed(probe.t, probe.params);
    REQUIRE_THAT(half, Catch::Matchers::WithinRel(0.5 * full, 1e-12));
  }
}

TEST_CASE("token-value partial equals the displayed-form recycling volume") {
  RandomStream rng(407, 0);
  for (int i = 0; i < 100; ++i) {
    const Probe probe = random_probe(rng);
    const auto pt = evaluate_point(probe.t, probe.params);
    // With clamps inactive and linear waste the composed volume is the
    // displayed-form product.
    REQUIRE_THAT(partial_wrt_token_value(probe.t, probe.params),
                 Catch::Matchers::WithinRel(pt.recycling_volume, 1e-12));
  }
}

TEST_CASE("subsidy partial is exactly one") {
  RandomStream rng(408, 0);
  for (int i = 0; i < 20; ++i) {
    const Probe probe = random_probe(rng);
    REQUIRE(partial_wrt_subsidy(probe.t, probe.params) == 1.0);
  }
}

TEST_CASE("subsidy shift moves the reference-mode net benefit exactly") {
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
  p.subsidy_schedule = Schedule::constant(10.0);
  for (double delta : {1.0, 100.0, -50.0}) {
    ReferenceModeVars base;
    base.subsidy = 10.0;
    ReferenceModeVars shifted;
    shifted.subsidy = 10.0 + delta;
    REQUIRE(net_benefit_reference_mode(4.0, p, shifted) -
                net_benefit_reference_mode(4.0, p, base) ==
            delta);
  }
}

TEST_CASE("analytic partials match reference-mode central differences") {
  RandomStream rng(409, 0);
  for (int i = 0; i < 100; ++i) {
    const Probe probe = random_probe(rng);
    const auto rows = sensitivity_report(probe.t, probe.params);
    for (const auto& row : rows) {
      CAPTURE(row.parameter, to_string(row.mode), row.analytic,
              row.finite_difference, probe.t);
      REQUIRE(row.relative_error <= 1e-6);
    }
  }
}

TEST_CASE("partial signs over valid parameters") {
  RandomStream rng(411, 0);
  for (int i = 0; i < 200; ++i) {
    const Probe probe = random_probe(rng);
    REQUIRE(partial_wrt_token_value(probe.t, probe.params) >= 0.0);
    REQUIRE(partial_wrt_unit_cost(probe.t, probe.params) <= 0.0);
    REQUIRE(partial_wrt_carbon_credit_reference(probe.t, probe.params) >= 0.0);
    REQUIRE(partial_wrt_carbon_credit_composed(probe.t, probe.params) >= 0.0);
    REQUIRE(partial_wrt_subsidy(probe.t, probe.params) == 1.0);
  }
}

TEST_CASE("sensitivity report layout") {
  ScenarioParams p;
  const auto rows = sensitivity_report(2.0, p);
  REQUIRE(rows.size() == 6);
  REQUIRE(rows[0].parameter == "token_value");
  REQUIRE(rows[0].mode == SensitivityMode::reference);
  REQUIRE(rows[3].parameter == "carbon_credit_price");
  REQUIRE(rows[3].mode == SensitivityMode::composed);
  REQUIRE(rows[4].parameter == "subsidy");
  REQUIRE(rows[4].analytic == 1.0);
  REQUIRE(rows[4].relative_error <= 1e-12);
  REQUIRE(rows[5].mode == SensitivityMode::full);
}

TEST_CASE("full-mode token-value sensitivity includes the utility channel") {
  RandomStream rng(410, 0);
  for (int i = 0; i < 50; ++i) {
    Probe probe = random_probe(rng);
    probe.params.alpha_financial = 0.1;  // keep the utility channel live
    const double full =
        full_partial_wrt_token_value(probe.t, probe.params);
    const double fd = central_difference(
        [&](double x) {
          ComposedPointVars v;
          v.token_value = x;
          return evaluate_point(probe.t, probe.params, v).net_benefit;
        },
        token_value_from_market(
            probe.params.demand_schedule.at(probe.t),
            probe.params.token_supply_schedule.at(probe.t)));
    REQUIRE(std::fabs(full - fd) / std::max(1.0, std::fabs(full)) <= 1e-6);
  }
}

// ---------------------------------------------------------------------------
// Sweeps.

namespace {

MonteCarloScenario sweep_scenario() {
  MonteCarloScenario s;
  s.params.p_max = 0.5;
  s.params.adoption_rate = 1e9;
  s.params.alpha_financial = 0.0;
  s.params.alpha_social = 1.0;
  s.params.social_signal_schedule = Schedule::constant(1.0);
  s.params.eta_0 = 0.5;
  s.params.w_0 = 1000.0;
  s.params.demand_schedule = Schedule::constant(2.0);
  s.params.token_supply_schedule = Schedule::constant(1.0);
  s.params.unit_cost = 1.0;
  s.params.env_alpha = 1.0;
  s.params.carbon_credit_price = 2.0;
  s.params.base_cost = 100.0;
  s.grid = TimeGrid{0.0, 1.0, 2};
  return s;
}

}  // namespace

TEST_CASE("sweep over carbon credit price is monotone") {
  MonteCarloScenario s = sweep_scenario();
  s.stochastic_inputs.token_value = DistributionSpec::lognormal(0.5, 0.4);
  const auto table =
      sweep(s, "carbon_credit_price", {0.0, 5.0, 10.0}, 400, 21, 2);
  REQUIRE(table.size() == 3);
  REQUIRE(table[0].summary.mean <= table[1].summary.mean);
  REQUIRE(table[1].summary.mean <= table[2].summary.mean);
}

TEST_CASE("sweep over unit cost is anti-monotone") {
  MonteCarloScenario s = sweep_scenario();
  s.stochastic_inputs.token_value = DistributionSpec::lognormal(0.5, 0.4);
  const auto table = sweep(s, "unit_cost", {0.0, 2.0, 4.0}, 400, 21, 2);
  REQUIRE(table[0].summary.mean >= table[1].summary.mean);
  REQUIRE(table[1].summary.mean >= table[2].summary.mean);
}

TEST_CASE("subsidy sweep shifts the mean exactly under constant draws") {
  MonteCarloScenario s = sweep_scenario();
  s.stochastic_inputs.token_value = DistributionSpec::constant(2.0);
  const auto table = sweep(s, "subsidy", {0.0, 1000.0}, 250, 5, 2);
  REQUIRE(table[1].summary.mean - table[0].summary.mean == 1000.0);
}

TEST_CASE("sweep with constant inputs reproduces deterministic values exactly") {
  MonteCarloScenario s = sweep_scenario();
  s.stochastic_inputs.token_value = DistributionSpec::constant(2.0);
  const auto table = sweep(s, "env_alpha", {0.0, 1.0, 2.5}, 100, 5, 1);
  for (const auto& point : table) {
    MonteCarloScenario expected = s;
    expected.params.env_alpha = point.value;
    ParamOverrides ov;
    ov.token_value = 2.0;
    const auto traj = evaluate_trajectory(expected.params, expected.grid,
                                          WasteMode::linear, {}, ov);
    REQUIRE(point.summary.mean == traj.back().net_benefit);
    REQUIRE(point.summary.sample_std == 0.0);
  }
}

TEST_CASE("token_value_mean sweep recenters the distribution") {
  MonteCarloScenario s = sweep_scenario();
  s.stochastic_inputs.token_value =
      lognormal_from_natural_moments(2.0, 1.0);
  const auto table =
      sweep(s, "token_value_mean", {1.0, 2.0, 4.0}, 2000, 77, 2);
  REQUIRE(table[0].summary.mean < table[1].summary.mean);
  REQUIRE(table[1].summary.mean < table[2].summary.mean);
  // re-centered spec keeps the natural sd
  const auto shifted = shift_distribution_mean(
      *s.stochastic_inputs.token_value, 4.0);
  const auto [mean, sd] = lognormal_natural_moments(shifted);
  REQUIRE_THAT(mean, Catch::Matchers::WithinRel(4.0, 1e-12));
  REQUIRE_THAT(sd, Catch::Matchers::WithinRel(1.0, 1e-12));
}

TEST_CASE("token_value_mean sweep requires a stochastic token value") {
  MonteCarloScenario s = sweep_scenario();
  REQUIRE_THROWS_AS(sweep(s, "token_value_mean", {1.0}, 10, 1, 1), UsageError);
}

TEST_CASE("unknown sweep parameter lists the valid names") {
  MonteCarloScenario s = sweep_scenario();
  REQUIRE_THROWS_WITH(
      sweep(s, "definitely_not_a_param", {1.0}, 10, 1, 1),
      Catch::Matchers::ContainsSubstring("unit_cost") &&
          Catch::Matchers::ContainsSubstring("carbon_credit_price") &&
          Catch::Matchers::ContainsSubstring("subsidy") &&
          Catch::Matchers::ContainsSubstring("env_alpha") &&
          Catch::Matchers::ContainsSubstring("token_value_mean"));
}
