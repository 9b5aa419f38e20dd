#pragma once

#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "tokencycle/comparison.hpp"
#include "tokencycle/errors.hpp"
#include "tokencycle/montecarlo.hpp"
#include "tokencycle/sensitivity.hpp"
#include "tokencycle/version.hpp"

namespace tokencycle {

using nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

// ---------------------------------------------------------------------------
// Number formatting: shortest round-trip form, locale-independent.

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// JSON helpers with exact field paths in every error.

namespace jsondetail {

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline const json& require(const json& j, const std::string& path,
                           const std::string& key) {
  if (!j.contains(key)) {
    throw ConfigError(join(path, key), "missing required field");
  }
  return j.at(key);
}

inline void check_object(const json& j, const std::string& path) {
  if (!j.is_object()) {
    throw ConfigError(path, "must be an object");
  }
}

inline void check_keys(const json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  check_object(j, path);
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ConfigError(join(path, key), "unknown field");
    }
  }
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) {
    throw ConfigError(path, "must be a number");
  }
  return j.get<double>();
}

inline double number_field(const json& j, const std::string& path,
                           const std::string& key) {
  return number(require(j, path, key), join(path, key));
}

inline double number_or(const json& j, const std::string& path,
                        const std::string& key, double fallback) {
  if (!j.contains(key)) {
    return fallback;
  }
  return number(j.at(key), join(path, key));
}

inline long long integer_or(const json& j, const std::string& path,
                            const std::string& key, long long fallback) {
  if (!j.contains(key)) {
    return fallback;
  }
  const json& v = j.at(key);
  if (!v.is_number_integer()) {
    throw ConfigError(join(path, key), "must be an integer");
  }
  return v.get<long long>();
}

inline std::string string_field(const json& j, const std::string& path,
                                const std::string& key) {
  const json& v = require(j, path, key);
  if (!v.is_string()) {
    throw ConfigError(join(path, key), "must be a string");
  }
  return v.get<std::string>();
}

}  // namespace jsondetail

// ---------------------------------------------------------------------------
// Schedule <-> JSON. A bare number is shorthand for a constant schedule.

inline Schedule parse_schedule(const json& j, const std::string& path) {
  if (j.is_number()) {
    return Schedule::constant(j.get<double>());
  }
  jsondetail::check_keys(j, path, {"interpolation", "breakpoints"});
  Interpolation interp = Interpolation::piecewise_constant;
  if (j.contains("interpolation")) {
    const std::string s =
        jsondetail::string_field(j, path, "interpolation");
    if (s == "piecewise-constant") {
      interp = Interpolation::piecewise_constant;
    } else if (s == "linear") {
      interp = Interpolation::linear;
    } else {
      throw ConfigError(path + ".interpolation",
                        "must be 'piecewise-constant' or 'linear'");
    }
  }
  const json& bps = jsondetail::require(j, path, "breakpoints");
  if (!bps.is_array() || bps.empty()) {
    throw ConfigError(path + ".breakpoints", "must be a non-empty array");
  }
  std::vector<std::pair<double, double>> breakpoints;
  for (std::size_t i = 0; i < bps.size(); ++i) {
    const std::string bp_path =
        path + ".breakpoints[" + std::to_string(i) + "]";
    const json& bp = bps.at(i);
    if (!bp.is_array() || bp.size() != 2) {
      throw ConfigError(bp_path, "must be a [time, value] pair");
    }
    breakpoints.emplace_back(jsondetail::number(bp.at(0), bp_path + "[0]"),
                             jsondetail::number(bp.at(1), bp_path + "[1]"));
  }
  Schedule schedule(std::move(breakpoints), interp);
  schedule.validate(path);
  return schedule;
}

inline json schedule_to_json(const Schedule& s) {
  json bps = json::array();
  for (const auto& [t, v] : s.breakpoints()) {
    bps.push_back(json::array({t, v}));
  }
  return json{{"interpolation",
               s.interpolation() == Interpolation::linear
                   ? "linear"
                   : "piecewise-constant"},
              {"breakpoints", std::move(bps)}};
}

// ---------------------------------------------------------------------------
// DistributionSpec <-> JSON.

inline DistributionSpec parse_distribution(const json& j,
                                           const std::string& path) {
  jsondetail::check_object(j, path);
  const std::string kind = jsondetail::string_field(j, path, "kind");
  DistributionSpec spec;
  if (kind == "constant") {
    jsondetail::check_keys(j, path, {"kind", "value", "clamp"});
    spec = DistributionSpec::constant(
        jsondetail::number_field(j, path, "value"));
  } else if (kind == "normal") {
    jsondetail::check_keys(j, path, {"kind", "mean", "sd", "clamp"});
    spec = DistributionSpec::normal(jsondetail::number_field(j, path, "mean"),
                                    jsondetail::number_field(j, path, "sd"));
  } else if (kind == "lognormal") {
    jsondetail::check_keys(
        j, path, {"kind", "log_mean", "log_sd", "natural_mean", "natural_sd",
                  "clamp"});
    const bool log_space = j.contains("log_mean") || j.contains("log_sd");
    const bool natural = j.contains("natural_mean") || j.contains("natural_sd");
    if (log_space && natural) {
      throw ConfigError(path,
                        "give either (log_mean, log_sd) or "
                        "(natural_mean, natural_sd), not both");
    }
    if (natural) {
      spec = lognormal_from_natural_moments(
          jsondetail::number_field(j, path, "natural_mean"),
          jsondetail::number_field(j, path, "natural_sd"));
    } else {
      spec = DistributionSpec::lognormal(
          jsondetail::number_field(j, path, "log_mean"),
          jsondetail::number_field(j, path, "log_sd"));
    }
  } else if (kind == "beta") {
    jsondetail::check_keys(j, path, {"kind", "a", "b", "clamp"});
    spec = DistributionSpec::beta(jsondetail::number_field(j, path, "a"),
                                  jsondetail::number_field(j, path, "b"));
  } else if (kind == "scaled-beta") {
    jsondetail::check_keys(j, path, {"kind", "a", "b", "lo", "hi", "clamp"});
    spec = DistributionSpec::scaled_beta(
        jsondetail::number_field(j, path, "a"),
        jsondetail::number_field(j, path, "b"),
        jsondetail::number_field(j, path, "lo"),
        jsondetail::number_field(j, path, "hi"));
  } else {
    throw ConfigError(path + ".kind",
                      "must be one of constant, normal, lognormal, beta, "
                      "scaled-beta");
  }
  if (j.contains("clamp")) {
    const json& c = j.at("clamp");
    if (!c.is_array() || c.size() != 2) {
      throw ConfigError(path + ".clamp", "must be a [lo, hi] pair");
    }
    spec.clamp = ClampBounds{jsondetail::number(c.at(0), path + ".clamp[0]"),
                             jsondetail::number(c.at(1), path + ".clamp[1]")};
  }
  spec.validate(path);
  return spec;
}

inline json distribution_to_json(const DistributionSpec& spec) {
  json j;
  switch (spec.kind) {
    case DistributionKind::constant:
      j = json{{"kind", "constant"}, {"value", spec.a}};
      break;
    case DistributionKind::normal:
      j = json{{"kind", "normal"}, {"mean", spec.a}, {"sd", spec.b}};
      break;
    case DistributionKind::lognormal:
      j = json{{"kind", "lognormal"}, {"log_mean", spec.a}, {"log_sd", spec.b}};
      break;
    case DistributionKind::beta:
      j = json{{"kind", "beta"}, {"a", spec.a}, {"b", spec.b}};
      break;
    case DistributionKind::scaled_beta:
      j = json{{"kind", "scaled-beta"},
               {"a", spec.a},
               {"b", spec.b},
               {"lo", spec.lo},
               {"hi", spec.hi}};
      break;
  }
  if (spec.clamp) {
    j["clamp"] = json::array({spec.clamp->lo, spec.clamp->hi});
  }
  return j;
}

// ---------------------------------------------------------------------------
// ScenarioParams / grid / scenario bodies.

inline ScenarioParams parse_params(const json& j, const std::string& path) {
  jsondetail::check_keys(
      j, path,
      {"p_max", "adoption_rate", "alpha_financial", "alpha_social", "eta_0",
       "eta_growth", "w_0", "waste_drift", "waste_volatility",
       "waste_linear_growth", "base_cost", "unit_cost", "env_alpha",
       "carbon_credit_price", "qualifying_fraction", "subsidy_schedule",
       "demand_schedule", "token_supply_schedule", "social_signal_schedule"});
  ScenarioParams p;
  p.p_max = jsondetail::number_or(j, path, "p_max", p.p_max);
  p.adoption_rate =
      jsondetail::number_or(j, path, "adoption_rate", p.adoption_rate);
  p.alpha_financial =
      jsondetail::number_or(j, path, "alpha_financial", p.alpha_financial);
  p.alpha_social =
      jsondetail::number_or(j, path, "alpha_social", p.alpha_social);
  p.eta_0 = jsondetail::number_or(j, path, "eta_0", p.eta_0);
  p.eta_growth = jsondetail::number_or(j, path, "eta_growth", p.eta_growth);
  p.w_0 = jsondetail::number_or(j, path, "w_0", p.w_0);
  p.waste_drift = jsondetail::number_or(j, path, "waste_drift", p.waste_drift);
  p.waste_volatility =
      jsondetail::number_or(j, path, "waste_volatility", p.waste_volatility);
  p.waste_linear_growth = jsondetail::number_or(j, path, "waste_linear_growth",
                                                p.waste_linear_growth);
  p.base_cost = jsondetail::number_or(j, path, "base_cost", p.base_cost);
  p.unit_cost = jsondetail::number_or(j, path, "unit_cost", p.unit_cost);
  p.env_alpha = jsondetail::number_or(j, path, "env_alpha", p.env_alpha);
  p.carbon_credit_price = jsondetail::number_or(j, path, "carbon_credit_price",
                                                p.carbon_credit_price);
  p.qualifying_fraction = jsondetail::number_or(j, path, "qualifying_fraction",
                                                p.qualifying_fraction);
  if (j.contains("subsidy_schedule")) {
    p.subsidy_schedule =
        parse_schedule(j.at("subsidy_schedule"), path + ".subsidy_schedule");
  }
  if (j.contains("demand_schedule")) {
    p.demand_schedule =
        parse_schedule(j.at("demand_schedule"), path + ".demand_schedule");
  }
  if (j.contains("token_supply_schedule")) {
    p.token_supply_schedule = parse_schedule(
        j.at("token_supply_schedule"), path + ".token_supply_schedule");
  }
  if (j.contains("social_signal_schedule")) {
    p.social_signal_schedule = parse_schedule(
        j.at("social_signal_schedule"), path + ".social_signal_schedule");
  }
  p.validate(path);
  return p;
}

inline json params_to_json(const ScenarioParams& p) {
  return json{
      {"p_max", p.p_max},
      {"adoption_rate", p.adoption_rate},
      {"alpha_financial", p.alpha_financial},
      {"alpha_social", p.alpha_social},
      {"eta_0", p.eta_0},
      {"eta_growth", p.eta_growth},
      {"w_0", p.w_0},
      {"waste_drift", p.waste_drift},
      {"waste_volatility", p.waste_volatility},
      {"waste_linear_growth", p.waste_linear_growth},
      {"base_cost", p.base_cost},
      {"unit_cost", p.unit_cost},
      {"env_alpha", p.env_alpha},
      {"carbon_credit_price", p.carbon_credit_price},
      {"qualifying_fraction", p.qualifying_fraction},
      {"subsidy_schedule", schedule_to_json(p.subsidy_schedule)},
      {"demand_schedule", schedule_to_json(p.demand_schedule)},
      {"token_supply_schedule", schedule_to_json(p.token_supply_schedule)},
      {"social_signal_schedule", schedule_to_json(p.social_signal_schedule)}};
}

inline TimeGrid parse_grid(const json& j, const std::string& path) {
  jsondetail::check_keys(j, path, {"t_start", "dt", "n_steps"});
  TimeGrid g;
  g.t_start = jsondetail::number_or(j, path, "t_start", g.t_start);
  g.dt = jsondetail::number_or(j, path, "dt", g.dt);
  g.n_steps = jsondetail::integer_or(j, path, "n_steps", g.n_steps);
  g.validate(path);
  return g;
}

inline json grid_to_json(const TimeGrid& g) {
  return json{{"t_start", g.t_start}, {"dt", g.dt}, {"n_steps", g.n_steps}};
}

// ---------------------------------------------------------------------------
// Scenario files.

enum class ScenarioKind { deterministic, monte_carlo, comparison, sweep };

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::deterministic: return "deterministic";
    case ScenarioKind::monte_carlo: return "monte-carlo";
    case ScenarioKind::comparison: return "comparison";
    case ScenarioKind::sweep: return "sweep";
  }
  return "?";
}

struct SweepSpec {
  std::string parameter;
  std::vector<double> values;
};

struct ScenarioFile {
  std::string schema_version = kSchemaVersion;
  ScenarioKind kind = ScenarioKind::deterministic;
  json metadata = json::object();

  // deterministic / monte-carlo / sweep
  MonteCarloScenario scenario;
  long long default_trials = 10000;
  std::optional<SweepSpec> sweep_spec;

  // comparison (exactly one of the two is set)
  std::optional<TokenizedComparativeConfig> tokenized;
  std::optional<SubsidyComparativeConfig> subsidy;
};

inline TokenizedComparativeConfig parse_tokenized(const json& j,
                                                  const std::string& path) {
  jsondetail::check_keys(
      j, path,
      {"model", "base_token_value", "mean_multiplier", "natural_sd",
       "participation_base", "participation_elasticity",
       "carbon_credit_per_unit", "volume", "op_cost_mean", "op_cost_sd"});
  TokenizedComparativeConfig c;
  c.base_token_value =
      jsondetail::number_or(j, path, "base_token_value", c.base_token_value);
  c.mean_multiplier =
      jsondetail::number_or(j, path, "mean_multiplier", c.mean_multiplier);
  c.natural_sd = jsondetail::number_or(j, path, "natural_sd", c.natural_sd);
  c.participation_base = jsondetail::number_or(j, path, "participation_base",
                                               c.participation_base);
  c.participation_elasticity = jsondetail::number_or(
      j, path, "participation_elasticity", c.participation_elasticity);
  c.carbon_credit_per_unit = jsondetail::number_or(
      j, path, "carbon_credit_per_unit", c.carbon_credit_per_unit);
  c.volume = jsondetail::number_or(j, path, "volume", c.volume);
  c.op_cost_mean =
      jsondetail::number_or(j, path, "op_cost_mean", c.op_cost_mean);
  c.op_cost_sd = jsondetail::number_or(j, path, "op_cost_sd", c.op_cost_sd);
  c.validate(path);
  return c;
}

inline SubsidyComparativeConfig parse_subsidy(const json& j,
                                              const std::string& path) {
  jsondetail::check_keys(j, path,
                         {"model", "fixed_reward", "participation", "volume",
                          "op_cost_mean", "op_cost_sd"});
  SubsidyComparativeConfig c;
  c.fixed_reward =
      jsondetail::number_or(j, path, "fixed_reward", c.fixed_reward);
  c.participation =
      jsondetail::number_or(j, path, "participation", c.participation);
  c.volume = jsondetail::number_or(j, path, "volume", c.volume);
  c.op_cost_mean =
      jsondetail::number_or(j, path, "op_cost_mean", c.op_cost_mean);
  c.op_cost_sd = jsondetail::number_or(j, path, "op_cost_sd", c.op_cost_sd);
  c.validate(path);
  return c;
}

inline ScenarioFile parse_scenario(const json& root) {
  jsondetail::check_keys(root, "",
                         {"schema_version", "kind", "metadata", "body"});
  ScenarioFile file;
  file.schema_version = jsondetail::string_field(root, "", "schema_version");
  if (file.schema_version != kSchemaVersion) {
    throw ConfigError("schema_version", "unknown version '" +
                                            file.schema_version +
                                            "' (supported: 1)");
  }
  const std::string kind = jsondetail::string_field(root, "", "kind");
  if (root.contains("metadata")) {
    file.metadata = root.at("metadata");
    jsondetail::check_object(file.metadata, "metadata");
  }
  const json& body = jsondetail::require(root, "", "body");
  jsondetail::check_object(body, "body");

  auto parse_mc_body = [&](bool allow_stochastic, bool allow_sweep) {
    std::initializer_list<const char*> keys =
        {"params", "grid", "waste_mode", "horizon_aggregation",
         "stochastic_inputs", "n_trials", "sweep"};
    jsondetail::check_keys(body, "body", keys);
    if (body.contains("params")) {
      file.scenario.params = parse_params(body.at("params"), "params");
    } else {
      file.scenario.params.validate("params");
    }
    if (body.contains("grid")) {
      file.scenario.grid = parse_grid(body.at("grid"), "grid");
    }
    if (body.contains("waste_mode")) {
      const std::string mode =
          jsondetail::string_field(body, "body", "waste_mode");
      if (mode == "linear") {
        file.scenario.waste_mode = WasteMode::linear;
      } else if (mode == "gbm") {
        file.scenario.waste_mode = WasteMode::gbm;
      } else {
        throw ConfigError("waste_mode", "must be 'linear' or 'gbm'");
      }
    }
    if (body.contains("horizon_aggregation")) {
      const std::string agg =
          jsondetail::string_field(body, "body", "horizon_aggregation");
      if (agg == "terminal") {
        file.scenario.horizon_aggregation = HorizonAggregation::terminal;
      } else if (agg == "sum-over-grid") {
        file.scenario.horizon_aggregation = HorizonAggregation::sum_over_grid;
      } else {
        throw ConfigError("horizon_aggregation",
                          "must be 'terminal' or 'sum-over-grid'");
      }
    }
    if (body.contains("stochastic_inputs")) {
      if (!allow_stochastic) {
        throw ConfigError("stochastic_inputs",
                          "not allowed in a deterministic scenario");
      }
      const json& inputs = body.at("stochastic_inputs");
      jsondetail::check_keys(inputs, "stochastic_inputs",
                             {"token_value", "participation_base", "base_cost",
                              "carbon_credit_price"});
      for (int i = 0; i < 4; ++i) {
        const char* name = StochasticInputs::kNames[i];
        if (inputs.contains(name)) {
          file.scenario.stochastic_inputs.by_index(i) = parse_distribution(
              inputs.at(name), std::string("stochastic_inputs.") + name);
        }
      }
    }
    file.default_trials =
        jsondetail::integer_or(body, "body", "n_trials", file.default_trials);
    if (file.default_trials < 1) {
      throw ConfigError("n_trials", "must be >= 1");
    }
    if (body.contains("sweep")) {
      if (!allow_sweep) {
        throw ConfigError("sweep", "only allowed in a sweep scenario");
      }
      const json& sw = body.at("sweep");
      jsondetail::check_keys(sw, "sweep", {"parameter", "values"});
      SweepSpec spec;
      spec.parameter = jsondetail::string_field(sw, "sweep", "parameter");
      const json& values = jsondetail::require(sw, "sweep", "values");
      if (!values.is_array() || values.empty()) {
        throw ConfigError("sweep.values", "must be a non-empty array");
      }
      for (std::size_t i = 0; i < values.size(); ++i) {
        spec.values.push_back(jsondetail::number(
            values.at(i), "sweep.values[" + std::to_string(i) + "]"));
      }
      file.sweep_spec = std::move(spec);
    }
  };

  if (kind == "deterministic") {
    file.kind = ScenarioKind::deterministic;
    parse_mc_body(false, false);
    if (file.scenario.waste_mode == WasteMode::gbm) {
      throw ConfigError("waste_mode",
                        "deterministic scenarios require linear waste");
    }
  } else if (kind == "monte-carlo") {
    file.kind = ScenarioKind::monte_carlo;
    parse_mc_body(true, false);
  } else if (kind == "sweep") {
    file.kind = ScenarioKind::sweep;
    parse_mc_body(true, true);
  } else if (kind == "comparison") {
    file.kind = ScenarioKind::comparison;
    const std::string model = jsondetail::string_field(body, "body", "model");
    if (model == "tokenized") {
      file.tokenized = parse_tokenized(body, "body");
    } else if (model == "subsidy") {
      file.subsidy = parse_subsidy(body, "body");
    } else {
      throw ConfigError("body.model", "must be 'tokenized' or 'subsidy'");
    }
  } else {
    throw ConfigError(
        "kind", "must be one of deterministic, monte-carlo, comparison, sweep");
  }
  return file;
}

inline json scenario_to_json(const ScenarioFile& file) {
  json body;
  switch (file.kind) {
    case ScenarioKind::deterministic:
    case ScenarioKind::monte_carlo:
    case ScenarioKind::sweep: {
      body = json{{"params", params_to_json(file.scenario.params)},
                  {"grid", grid_to_json(file.scenario.grid)},
                  {"waste_mode", file.scenario.waste_mode == WasteMode::gbm
                                     ? "gbm"
                                     : "linear"},
                  {"n_trials", file.default_trials}};
      if (file.kind != ScenarioKind::deterministic) {
        body["horizon_aggregation"] =
            file.scenario.horizon_aggregation == HorizonAggregation::terminal
                ? "terminal"
                : "sum-over-grid";
        json inputs = json::object();
        for (int i = 0; i < 4; ++i) {
          if (file.scenario.stochastic_inputs.by_index(i)) {
            inputs[StochasticInputs::kNames[i]] = distribution_to_json(
                *file.scenario.stochastic_inputs.by_index(i));
          }
        }
        body["stochastic_inputs"] = std::move(inputs);
      }
      if (file.sweep_spec) {
        body["sweep"] = json{{"parameter", file.sweep_spec->parameter},
                             {"values", file.sweep_spec->values}};
      }
      break;
    }
    case ScenarioKind::comparison: {
      if (file.tokenized) {
        const auto& c = *file.tokenized;
        body = json{{"model", "tokenized"},
                    {"base_token_value", c.base_token_value},
                    {"mean_multiplier", c.mean_multiplier},
                    {"natural_sd", c.natural_sd},
                    {"participation_base", c.participation_base},
                    {"participation_elasticity", c.participation_elasticity},
                    {"carbon_credit_per_unit", c.carbon_credit_per_unit},
                    {"volume", c.volume},
                    {"op_cost_mean", c.op_cost_mean},
                    {"op_cost_sd", c.op_cost_sd}};
      } else {
        const auto& c = *file.subsidy;
        body = json{{"model", "subsidy"},
                    {"fixed_reward", c.fixed_reward},
                    {"participation", c.participation},
                    {"volume", c.volume},
                    {"op_cost_mean", c.op_cost_mean},
                    {"op_cost_sd", c.op_cost_sd}};
      }
      break;
    }
  }
  return json{{"schema_version", file.schema_version},
              {"kind", to_string(file.kind)},
              {"metadata", file.metadata},
              {"body", std::move(body)}};
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline ScenarioFile load_scenario(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("not valid JSON: ") +
                                         e.what());
  }
  return parse_scenario(root);
}

// ---------------------------------------------------------------------------
// Output files.

inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot write " + tmp.string());
    }
    out << content;
    if (!out.good()) {
      throw IoError("short write to " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() +
                  ": " + ec.message());
  }
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw IoError("sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string trials_csv(const std::vector<TrialOutcome>& outcomes) {
  std::string out = "trial_index";
  if (!outcomes.empty()) {
    for (const auto& [name, value] : outcomes.front().sampled_values) {
      out += "," + name;
    }
  }
  out += ",net_benefit,recycling_volume,token_revenue,op_cost,env_benefit,"
         "clamp_count\n";
  for (const TrialOutcome& o : outcomes) {
    out += std::to_string(o.trial_index);
    for (const auto& [name, value] : o.sampled_values) {
      out += "," + format_double(value);
    }
    out += "," + format_double(o.net_benefit);
    out += "," + format_double(o.recycling_volume);
    out += "," + format_double(o.token_revenue);
    out += "," + format_double(o.op_cost);
    out += "," + format_double(o.env_benefit);
    out += "," + std::to_string(o.clamp_count);
    out += "\n";
  }
  return out;
}

inline std::string histogram_csv(const std::vector<HistogramBin>& bins) {
  std::string out = "bin_lo,bin_hi,count\n";
  for (const HistogramBin& b : bins) {
    out += format_double(b.lo) + "," + format_double(b.hi) + "," +
           std::to_string(b.count) + "\n";
  }
  return out;
}

inline json summary_to_json(const MonteCarloSummary& s) {
  json hist = json::array();
  for (const HistogramBin& b : s.histogram) {
    hist.push_back(json{{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
  }
  return json{{"n", s.n},
              {"mean", s.mean},
              {"sample_std", s.sample_std},
              {"sample_std_defined", s.sample_std_defined},
              {"min", s.min},
              {"max", s.max},
              {"p5", s.p5},
              {"p50", s.p50},
              {"p95", s.p95},
              {"total_clamp_events", s.total_clamp_events},
              {"histogram", std::move(hist)}};
}

inline std::string sweep_csv(const std::vector<SweepPoint>& table) {
  std::string out = "parameter_value,mean,std,p5,p95\n";
  for (const SweepPoint& p : table) {
    out += format_double(p.value) + "," + format_double(p.summary.mean) + "," +
           format_double(p.summary.sample_std) + "," +
           format_double(p.summary.p5) + "," + format_double(p.summary.p95) +
           "\n";
  }
  return out;
}

inline std::string sensitivity_csv(const std::vector<SensitivityRow>& rows) {
  std::string out = "parameter,mode,analytic,finite_difference,relative_error\n";
  for (const SensitivityRow& r : rows) {
    out += r.parameter;
    out += std::string(",") + to_string(r.mode);
    out += "," + format_double(r.analytic);
    out += "," + format_double(r.finite_difference);
    out += "," + format_double(r.relative_error);
    out += "\n";
  }
  return out;
}

inline std::string paired_csv(const ComparisonResult& result) {
  std::string out =
      "trial_index,tv_draw,participation_tok,net_tok,net_sub,delta\n";
  for (std::size_t i = 0; i < result.tokenized_outcomes.size(); ++i) {
    const TrialOutcome& t = result.tokenized_outcomes[i];
    const TrialOutcome& s = result.subsidy_outcomes[i];
    double tv = 0.0;
    double participation = 0.0;
    for (const auto& [name, value] : t.sampled_values) {
      if (name == "token_value") tv = value;
      if (name == "participation") participation = value;
    }
    out += std::to_string(t.trial_index) + "," + format_double(tv) + "," +
           format_double(participation) + "," + format_double(t.net_benefit) +
           "," + format_double(s.net_benefit) + "," +
           format_double(t.net_benefit - s.net_benefit) + "\n";
  }
  return out;
}

// Shared equal-width bins across both nets, directly plottable.
inline std::string comparison_histogram_csv(const ComparisonResult& result,
                                            long long n_bins = 30) {
  std::vector<double> all;
  std::vector<double> tok;
  std::vector<double> sub;
  for (const auto& o : result.tokenized_outcomes) {
    tok.push_back(o.net_benefit);
    all.push_back(o.net_benefit);
  }
  for (const auto& o : result.subsidy_outcomes) {
    sub.push_back(o.net_benefit);
    all.push_back(o.net_benefit);
  }
  const auto bins = histogram(all, n_bins);
  auto count_into = [&](const std::vector<double>& values) {
    std::vector<long long> counts(bins.size(), 0);
    for (double v : values) {
      std::size_t idx = bins.size() - 1;
      for (std::size_t b = 0; b + 1 < bins.size(); ++b) {
        if (v < bins[b].hi) {
          idx = b;
          break;
        }
      }
      ++counts[idx];
    }
    return counts;
  };
  const auto tok_counts = count_into(tok);
  const auto sub_counts = count_into(sub);
  std::string out = "bin_lo,bin_hi,count_tokenized,count_subsidy\n";
  for (std::size_t b = 0; b < bins.size(); ++b) {
    out += format_double(bins[b].lo) + "," + format_double(bins[b].hi) + "," +
           std::to_string(tok_counts[b]) + "," + std::to_string(sub_counts[b]) +
           "\n";
  }
  return out;
}

inline json comparison_report_to_json(const ComparisonReport& report) {
  return json{{"tokenized", summary_to_json(report.tokenized)},
              {"subsidy", summary_to_json(report.subsidy)},
              {"mean_delta", report.mean_delta},
              {"probability_tokenized_exceeds_subsidy",
               report.probability_tokenized_exceeds_subsidy}};
}

inline json calibration_to_json(const CalibrationResult& c) {
  json trace = json::array();
  for (const CalibrationTracePoint& p : c.trace) {
    trace.push_back(json{{"natural_sd", p.natural_sd},
                         {"beta", p.beta},
                         {"achieved_mean", p.achieved_mean}});
  }
  return json{{"natural_sd", c.natural_sd},
              {"beta", c.beta},
              {"achieved_mean", c.achieved_mean},
              {"residual", c.residual},
              {"target_mean", c.target_mean},
              {"n_trials", c.n_trials},
              {"seed", c.seed},
              {"provenance",
               "calibrated reconstruction; the source publishes no "
               "distribution parameters"},
              {"trace", std::move(trace)}};
}

struct RunManifest {
  std::string scenario_digest;
  std::uint64_t master_seed = 0;
  long long n_trials = 0;
  unsigned workers = 1;
  std::string tool_version = kVersion;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;
};

inline json manifest_to_json(const RunManifest& m) {
  return json{{"scenario_digest", m.scenario_digest},
              {"master_seed", m.master_seed},
              {"n_trials", m.n_trials},
              {"workers", m.workers},
              {"tool_version", m.tool_version},
              {"started_at", m.started_at},
              {"finished_at", m.finished_at},
              {"outputs", m.outputs}};
}

}  // namespace tokencycle
