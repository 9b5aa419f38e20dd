// tokencycle: scenario-driven simulator for a tokenized recycling incentive
// model. Subcommands: run, compare, sensitivity, sweep, calibrate, validate.
//
// Exit codes: 0 success, 2 missing input, 3 invalid config, 4 I/O failure,
// 5 runtime trial failure, 6 calibration failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "tokencycle/tokencycle.hpp"

namespace fs = std::filesystem;
using namespace tokencycle;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMissingInput = 2;
constexpr int kExitInvalidConfig = 3;
constexpr int kExitIo = 4;
constexpr int kExitTrialFailure = 5;
constexpr int kExitCalibration = 6;

struct CommonOptions {
  long long trials = -1;  // -1: use the scenario file's default
  std::uint64_t seed = 1;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::string out_dir = "out";
  long long bins = 30;
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_workers = true) {
  cmd->add_option("--trials", opt.trials, "Number of Monte Carlo trials");
  cmd->add_option("--seed", opt.seed, "Master seed");
  if (with_workers) {
    cmd->add_option("--workers", opt.workers, "Worker thread count");
  }
  cmd->add_option("--out", opt.out_dir, "Output directory");
  cmd->add_option("--bins", opt.bins, "Histogram bin count");
}

fs::path require_input(const std::string& path) {
  if (!fs::exists(path)) {
    throw IoError("missing input: " + path);
  }
  return fs::path(path);
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + dir + ": " +
                  ec.message());
  }
}

void print_summary(const std::string& label, const MonteCarloSummary& s) {
  std::cout << label << "\n"
            << "  n           " << s.n << "\n"
            << "  mean        " << format_double(s.mean) << "\n"
            << "  sample_std  " << format_double(s.sample_std)
            << (s.sample_std_defined ? "" : "  (undefined for n=1)") << "\n"
            << "  min         " << format_double(s.min) << "\n"
            << "  p5          " << format_double(s.p5) << "\n"
            << "  p50         " << format_double(s.p50) << "\n"
            << "  p95         " << format_double(s.p95) << "\n"
            << "  max         " << format_double(s.max) << "\n"
            << "  clamps      " << s.total_clamp_events << "\n";
}

RunManifest start_manifest(const std::string& scenario_bytes,
                           std::uint64_t seed, long long trials,
                           unsigned workers) {
  RunManifest m;
  m.scenario_digest = sha256_hex(scenario_bytes);
  m.master_seed = seed;
  m.n_trials = trials;
  m.workers = workers;
  m.started_at = utc_timestamp();
  return m;
}

void finish_manifest(RunManifest& m, const fs::path& out_dir) {
  m.finished_at = utc_timestamp();
  atomic_write_file(out_dir / "manifest.json",
                    manifest_to_json(m).dump(2) + "\n");
}

int cmd_run(const std::string& scenario_path, CommonOptions opt) {
  const fs::path input = require_input(scenario_path);
  const std::string bytes = read_file(input);
  const ScenarioFile file = parse_scenario(json::parse(bytes, nullptr, true));
  if (file.kind != ScenarioKind::monte_carlo &&
      file.kind != ScenarioKind::deterministic) {
    throw ConfigError("kind", "'run' needs a deterministic or monte-carlo "
                              "scenario, got " +
                                  std::string(to_string(file.kind)));
  }
  long long trials = opt.trials;
  if (trials < 0) {
    trials =
        file.kind == ScenarioKind::deterministic ? 1 : file.default_trials;
  }

  ensure_out_dir(opt.out_dir);
  RunManifest manifest = start_manifest(bytes, opt.seed, trials, opt.workers);

  const MonteCarloResult result =
      run_monte_carlo(file.scenario, trials, opt.seed, opt.workers, opt.bins);

  const fs::path out_dir(opt.out_dir);
  atomic_write_file(out_dir / "trials.csv", trials_csv(result.outcomes));
  atomic_write_file(out_dir / "histogram.csv",
                    histogram_csv(result.summary.histogram));
  json summary = json{{"scenario_digest", manifest.scenario_digest},
                      {"master_seed", opt.seed},
                      {"n_trials", trials},
                      {"summary", summary_to_json(result.summary)}};
  atomic_write_file(out_dir / "summary.json", summary.dump(2) + "\n");
  manifest.outputs = {"trials.csv", "histogram.csv", "summary.json"};
  finish_manifest(manifest, out_dir);

  print_summary("net benefit (" + std::string(to_string(file.kind)) + ", " +
                    std::to_string(trials) + " trials)",
                result.summary);
  return kExitOk;
}

int cmd_compare(const std::string& tok_path, const std::string& sub_path,
                CommonOptions opt) {
  const fs::path tok_input = require_input(tok_path);
  const fs::path sub_input = require_input(sub_path);
  const std::string tok_bytes = read_file(tok_input);
  const std::string sub_bytes = read_file(sub_input);
  const ScenarioFile tok_file =
      parse_scenario(json::parse(tok_bytes, nullptr, true));
  const ScenarioFile sub_file =
      parse_scenario(json::parse(sub_bytes, nullptr, true));
  if (!tok_file.tokenized) {
    throw ConfigError("body.model", tok_path + ": first scenario must be the "
                                               "tokenized comparison model");
  }
  if (!sub_file.subsidy) {
    throw ConfigError("body.model", sub_path + ": second scenario must be the "
                                               "subsidy comparison model");
  }
  const long long trials = opt.trials < 0 ? 10000 : opt.trials;

  ensure_out_dir(opt.out_dir);
  RunManifest manifest =
      start_manifest(tok_bytes + sub_bytes, opt.seed, trials, 1);

  const ComparisonResult result = run_comparison(
      *tok_file.tokenized, *sub_file.subsidy, trials, opt.seed, opt.bins);

  const fs::path out_dir(opt.out_dir);
  atomic_write_file(out_dir / "paired_trials.csv", paired_csv(result));
  atomic_write_file(out_dir / "comparison_histogram.csv",
                    comparison_histogram_csv(result, opt.bins));
  json summary = json{{"tokenized_digest", sha256_hex(tok_bytes)},
                      {"subsidy_digest", sha256_hex(sub_bytes)},
                      {"master_seed", opt.seed},
                      {"n_trials", trials},
                      {"report", comparison_report_to_json(result.report)}};
  atomic_write_file(out_dir / "comparison_summary.json", summary.dump(2) + "\n");
  manifest.outputs = {"paired_trials.csv", "comparison_histogram.csv",
                      "comparison_summary.json"};
  finish_manifest(manifest, out_dir);

  print_summary("tokenized net benefit", result.report.tokenized);
  print_summary("subsidy net benefit", result.report.subsidy);
  std::cout << "mean_delta  " << format_double(result.report.mean_delta)
            << "\nP(tokenized > subsidy)  "
            << format_double(
                   result.report.probability_tokenized_exceeds_subsidy)
            << "\n";
  return kExitOk;
}

int cmd_sensitivity(const std::string& scenario_path,
                    std::optional<double> at_time, CommonOptions opt) {
  const fs::path input = require_input(scenario_path);
  const std::string bytes = read_file(input);
  const ScenarioFile file = parse_scenario(json::parse(bytes, nullptr, true));
  if (file.kind == ScenarioKind::comparison) {
    throw ConfigError("kind",
                      "'sensitivity' needs a scenario with model params");
  }
  const double t = at_time.value_or(
      file.scenario.grid.time_at(file.scenario.grid.size() - 1));

  const auto rows = sensitivity_report(t, file.scenario.params);

  ensure_out_dir(opt.out_dir);
  atomic_write_file(fs::path(opt.out_dir) / "sensitivity.csv",
                    sensitivity_csv(rows));

  std::cout << "sensitivity at t=" << format_double(t) << "\n";
  std::cout << "parameter             mode      analytic        fd              rel_error\n";
  for (const auto& r : rows) {
    std::printf("%-21s %-9s %-15.8g %-15.8g %.3g\n", r.parameter.c_str(),
                to_string(r.mode), r.analytic, r.finite_difference,
                r.relative_error);
  }
  return kExitOk;
}

int cmd_sweep(const std::string& scenario_path, std::string param,
              std::string values_arg, CommonOptions opt) {
  const fs::path input = require_input(scenario_path);
  const std::string bytes = read_file(input);
  const ScenarioFile file = parse_scenario(json::parse(bytes, nullptr, true));
  if (file.kind != ScenarioKind::sweep &&
      file.kind != ScenarioKind::monte_carlo &&
      file.kind != ScenarioKind::deterministic) {
    throw ConfigError("kind", "'sweep' needs a sweep or monte-carlo scenario");
  }

  if (param.empty() && file.sweep_spec) {
    param = file.sweep_spec->parameter;
  }
  std::vector<double> values;
  if (!values_arg.empty()) {
    std::size_t pos = 0;
    while (pos <= values_arg.size()) {
      const std::size_t comma = values_arg.find(',', pos);
      const std::string tok =
          values_arg.substr(pos, comma == std::string::npos ? std::string::npos
                                                            : comma - pos);
      try {
        values.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw UsageError("--values: '" + tok + "' is not a number");
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  } else if (file.sweep_spec) {
    values = file.sweep_spec->values;
  }
  if (param.empty() || values.empty()) {
    throw UsageError(
        "sweep needs --param and --values (or a scenario of kind sweep)");
  }
  const long long trials = opt.trials < 0 ? file.default_trials : opt.trials;

  ensure_out_dir(opt.out_dir);
  RunManifest manifest = start_manifest(bytes, opt.seed, trials, opt.workers);

  const auto table =
      sweep(file.scenario, param, values, trials, opt.seed, opt.workers);

  atomic_write_file(fs::path(opt.out_dir) / "sweep.csv", sweep_csv(table));
  manifest.outputs = {"sweep.csv"};
  finish_manifest(manifest, fs::path(opt.out_dir));

  std::cout << "sweep over " << param << " (" << trials << " trials/point)\n";
  std::cout << "value           mean            std             p5              p95\n";
  for (const auto& p : table) {
    std::printf("%-15.8g %-15.8g %-15.8g %-15.8g %.8g\n", p.value,
                p.summary.mean, p.summary.sample_std, p.summary.p5,
                p.summary.p95);
  }
  return kExitOk;
}

int cmd_calibrate(double target, const std::string& config_path,
                  CommonOptions opt) {
  TokenizedComparativeConfig base;  // reference comparative constants
  std::string bytes;
  if (!config_path.empty()) {
    const fs::path input = require_input(config_path);
    bytes = read_file(input);
    const ScenarioFile file = parse_scenario(json::parse(bytes, nullptr, true));
    if (!file.tokenized) {
      throw ConfigError("body.model",
                        config_path + ": calibration needs a tokenized "
                                      "comparison scenario");
    }
    base = *file.tokenized;
  }
  const long long trials = opt.trials < 0 ? 10000 : opt.trials;

  ensure_out_dir(opt.out_dir);
  const CalibrationResult result =
      calibrate_tokenized(base, target, trials, opt.seed);

  json doc = calibration_to_json(result);
  doc["base_config_digest"] =
      bytes.empty() ? json(nullptr) : json(sha256_hex(bytes));
  atomic_write_file(fs::path(opt.out_dir) / "calibration.json",
                    doc.dump(2) + "\n");

  std::cout << "calibrated natural_sd=" << format_double(result.natural_sd)
            << " beta=" << format_double(result.beta)
            << "\nachieved_mean=" << format_double(result.achieved_mean)
            << " target=" << format_double(target)
            << " residual=" << format_double(result.residual) << "\n";
  return kExitOk;
}

int cmd_validate(const std::string& scenario_path) {
  const fs::path input = require_input(scenario_path);
  const ScenarioFile file = load_scenario(input);
  std::cout << "valid scenario (kind=" << to_string(file.kind) << ")\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tokenized recycling incentive simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string second_path;
  std::string param;
  std::string values_arg;
  std::string config_path;
  double target = 67501.0;
  std::optional<double> at_time;

  CommonOptions run_opt, cmp_opt, sweep_opt, cal_opt, sens_opt;

  auto* run = app.add_subcommand("run", "Run a deterministic or Monte Carlo scenario");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  add_common(run, run_opt);

  auto* compare = app.add_subcommand("compare", "Run the tokenized-vs-subsidy comparison");
  compare->add_option("tokenized", scenario_path, "Tokenized comparison scenario")->required();
  compare->add_option("subsidy", second_path, "Subsidy comparison scenario")->required();
  add_common(compare, cmp_opt, false);

  auto* sens = app.add_subcommand("sensitivity", "Analytic vs finite-difference sensitivities");
  sens->add_option("scenario", scenario_path, "Scenario file")->required();
  double at_time_value = 0.0;
  auto* at_opt = sens->add_option("--at-time", at_time_value, "Evaluation time (default: end of grid)");
  sens->add_option("--out", sens_opt.out_dir, "Output directory");

  auto* sweep_cmd = app.add_subcommand("sweep", "One-dimensional parameter sweep");
  sweep_cmd->add_option("scenario", scenario_path, "Scenario file")->required();
  sweep_cmd->add_option("--param", param, "Parameter to sweep");
  sweep_cmd->add_option("--values", values_arg, "Comma-separated values");
  add_common(sweep_cmd, sweep_opt);

  auto* calibrate = app.add_subcommand("calibrate", "Calibrate the tokenized comparative model");
  calibrate->add_option("--target", target, "Target mean net benefit");
  calibrate->add_option("--config", config_path, "Tokenized comparison scenario to calibrate");
  add_common(calibrate, cal_opt, false);

  auto* validate = app.add_subcommand("validate", "Validate a scenario file");
  validate->add_option("scenario", scenario_path, "Scenario file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(scenario_path, run_opt);
    if (compare->parsed()) return cmd_compare(scenario_path, second_path, cmp_opt);
    if (sens->parsed()) {
      if (at_opt->count() > 0) at_time = at_time_value;
      return cmd_sensitivity(scenario_path, at_time, sens_opt);
    }
    if (sweep_cmd->parsed()) return cmd_sweep(scenario_path, param, values_arg, sweep_opt);
    if (calibrate->parsed()) return cmd_calibrate(target, config_path, cal_opt);
    if (validate->parsed()) return cmd_validate(scenario_path);
  } catch (const CalibrationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCalibration;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTrialFailure;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return std::string(e.what()).starts_with("missing input")
               ? kExitMissingInput
               : kExitIo;
  } catch (const json::exception& e) {
    std::cerr << "error: invalid scenario JSON: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTrialFailure;
  }
  return kExitOk;
}
