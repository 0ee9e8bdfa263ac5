#include "risopt/cli.hpp"

#include "risopt/optimizer.hpp"
#include "risopt/scenario.hpp"
#include "risopt/sweep.hpp"
#include "risopt/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>

namespace risopt {

std::string software_version() { return std::string(RISOPT_VERSION) + "+" + RISOPT_GIT_REV; }

namespace cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string default_output_dir() {
  const char* env = std::getenv("RISOPT_OUT_DIR");
  return env && *env ? std::string(env) : std::string("risopt_out");
}

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<double> grid_res;
  std::optional<int> nr;
  std::optional<std::string> regime;
  std::optional<std::string> objective;
  std::optional<long long> seed;
  std::optional<int> workers;
  double ue_x = 0.0;
  double ue_y = 0.0;
};

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Config file with command-line overrides applied; records each override.
struct LoadedConfig {
  ConfigFile file;
  json overrides = json::object();
};

LoadedConfig load_with_overrides(const Options& o) {
  if (!fs::exists(o.config_path)) throw ConfigError("config file not found: " + o.config_path);
  LoadedConfig lc{ConfigFile::load(o.config_path)};
  auto put = [&](const std::string& flag, const std::string& key, const std::string& value) {
    lc.file.set(key, value);
    lc.overrides[flag] = value;
  };
  if (o.grid_res) put("--grid-res", "sweep.grid_resolution", fmt9(*o.grid_res));
  if (o.nr) put("--nr", "ris_elements", std::to_string(*o.nr));
  if (o.seed) put("--seed", "sweep.seed", std::to_string(*o.seed));
  if (o.workers) put("--workers", "sweep.workers", std::to_string(*o.workers));
  return lc;
}

/// Replaces the sweep configurations when --regime or --objective is given:
/// the no-RIS reference plus one RIS configuration per regime.
void apply_configuration_overrides(SweepConfig& sc, const Options& o, json& overrides) {
  if (!o.regime && !o.objective) return;
  Objective objective = Objective::Capacity;
  if (o.objective) {
    objective = *parse_objective(*o.objective);
    overrides["--objective"] = *o.objective;
  } else if (!sc.configurations.empty()) {
    objective = sc.configurations.front().objective;
  }
  std::vector<std::optional<Regime>> regimes;
  if (o.regime) {
    overrides["--regime"] = *o.regime;
    if (*o.regime != "none") regimes.push_back(*parse_regime(*o.regime));
  } else {
    for (const auto& c : sc.configurations)
      if (c.regime && std::find(regimes.begin(), regimes.end(), c.regime) == regimes.end())
        regimes.push_back(c.regime);
  }
  std::vector<SweepConfiguration> configs;
  configs.push_back(SweepConfiguration{std::nullopt, objective, 0});
  for (const auto& r : regimes) configs.push_back(SweepConfiguration{r, objective, sc.scenario.ris_elements()});
  sc.configurations = configs;
}

json point_json(const Point3& p) { return json::array({p.x(), p.y(), p.z()}); }

json scenario_json(const ScenarioConfig& s) {
  json j;
  j["carrier_frequency_hz"] = s.carrier_frequency;
  j["wavelength_m"] = s.wavelength();
  j["tx_power_dbm"] = watt_to_dbm(s.tx_power);
  j["tx_power_w"] = s.tx_power;
  j["noise_power_dbm"] = watt_to_dbm(s.noise_power);
  j["noise_power_w"] = s.noise_power;
  j["bandwidth_hz"] = s.bandwidth;
  j["bs_position"] = point_json(s.bs_position);
  j["bs_tilt_rad"] = json::array({s.bs_tilt.azimuth, s.bs_tilt.elevation});
  j["ris_position"] = point_json(s.ris_position);
  j["ris_tilt_rad"] = json::array({s.ris_tilt.azimuth, s.ris_tilt.elevation});
  j["ue_height"] = s.ue_height;
  j["bs_antennas"] = s.bs_antennas;
  j["ue_antennas"] = s.ue_antennas;
  j["antenna_spacing_m"] = s.antenna_spacing;
  j["ris_rows"] = s.ris_rows;
  j["ris_cols"] = s.ris_cols;
  j["ris_elements"] = s.ris_elements();
  j["ris_element_size_m"] = json::array({s.ris_element_width, s.ris_element_height});
  j["bs_gain_dbi"] = linear_to_db(s.bs_gain);
  j["bs_gain_linear"] = s.bs_gain;
  j["ue_gain_dbi"] = linear_to_db(s.ue_gain);
  j["ue_gain_linear"] = s.ue_gain;
  j["direct_link_antenna_gains"] = s.direct_link_antenna_gains;
  j["pathloss_min_distance_m"] = s.pathloss_min_distance;
  j["area"] = json::array({s.area.x_min, s.area.x_max, s.area.y_min, s.area.y_max});
  if (s.obstacle) {
    j["obstacle"] = json::array({s.obstacle->start.x(), s.obstacle->start.y(), s.obstacle->end.x(),
                                 s.obstacle->end.y()});
    j["obstacle_attenuation_db"] = -linear_to_db(s.obstacle->attenuation);
    j["obstacle_attenuation_linear"] = s.obstacle->attenuation;
  }
  return j;
}

json optimizer_json(const OptimizerConfig& o) {
  json j;
  j["method"] = o.method ? to_string(*o.method) : std::string("auto");
  j["step_size"] = o.step_size;
  j["momentum"] = o.momentum;
  j["rmsprop_decay"] = o.rmsprop_decay;
  j["rmsprop_epsilon"] = o.rmsprop_epsilon;
  j["adam_beta1"] = o.adam_beta1;
  j["adam_beta2"] = o.adam_beta2;
  j["adam_epsilon"] = o.adam_epsilon;
  j["inner_tol"] = o.inner_tol;
  j["outer_tol"] = o.outer_tol;
  j["max_inner_iters"] = o.max_inner_iters;
  j["max_outer_iters"] = o.max_outer_iters;
  return j;
}

json sweep_json(const SweepConfig& sc) {
  json j;
  j["grid_resolution"] = sc.grid_resolution;
  j["workers"] = sc.workers;
  j["seed"] = sc.global_seed;
  j["mask_radius"] = sc.mask_radius;
  json ids = json::array();
  for (const auto& c : sc.configurations) ids.push_back(c.id());
  j["configurations"] = ids;
  return j;
}

void write_manifest(const fs::path& dir, json manifest, const std::vector<fs::path>& outputs, double runtime) {
  manifest["runtime_seconds"] = runtime;
  json files = json::array();
  for (const auto& p : outputs) files.push_back(p.string());
  manifest["outputs"] = files;
  const fs::path path = dir / "manifest.json";
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << manifest.dump(2) << '\n';
}

json manifest_base(const std::string& command, const Options& o, const LoadedConfig& lc, const SweepConfig& sc) {
  json m;
  m["command"] = command;
  m["software_version"] = software_version();
  m["config_path"] = o.config_path;
  m["overrides"] = lc.overrides;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(describe(sc))));
  m["config_hash"] = hash;
  m["scenario"] = scenario_json(sc.scenario);
  m["optimizer"] = optimizer_json(sc.optimizer);
  m["sweep"] = sweep_json(sc);
  return m;
}

fs::path prepare_output_dir(const std::string& dir) {
  const fs::path p = dir.empty() ? fs::path(default_output_dir()) : fs::path(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw std::runtime_error("cannot create output directory " + p.string());
  return p;
}

SweepConfig resolve(const Options& o, LoadedConfig& lc) {
  ScenarioConfig scenario = load_scenario(lc.file);
  SweepConfig sc = load_sweep_config(lc.file, scenario);
  lc.file.require_all_used();
  apply_configuration_overrides(sc, o, lc.overrides);
  sc.validate();
  return sc;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  LoadedConfig lc = load_with_overrides(o);
  const SweepConfig sc = resolve(o, lc);
  const fs::path dir = prepare_output_dir(o.out_dir);

  const CoverageMap map = run_sweep(sc);
  std::vector<SummaryRow> rows = summarize(map, map);
  if (sc.scenario.obstacle) {
    const std::vector<bool> behind = behind_obstacle_mask(map.grid, sc.scenario);
    if (std::find(behind.begin(), behind.end(), true) != behind.end()) {
      const auto extra = summarize(map, map, &behind, "behind_obstacle");
      rows.insert(rows.end(), extra.begin(), extra.end());
    }
  }

  const fs::path coverage = dir / "coverage.csv";
  const fs::path summary = dir / "summary.csv";
  {
    std::ofstream f(coverage);
    if (!f) throw std::runtime_error("cannot write " + coverage.string());
    write_coverage_csv(f, map);
  }
  {
    std::ofstream f(summary);
    if (!f) throw std::runtime_error("cannot write " + summary.string());
    write_summary_csv(f, rows);
  }

  for (const auto& r : rows) {
    out << r.config_id << " [" << r.region << "]: peak " << fmt9(r.peak.value) << " bit/s/Hz at (" << fmt9(r.peak.at.x())
        << ", " << fmt9(r.peak.at.y()) << "), gain " << fmt9(r.gain_percent) << " % vs " << r.reference_id << '\n';
  }
  const std::size_t masked = map.count(PointStatus::Masked);
  const std::size_t failed = map.count(PointStatus::Failed);
  for (const auto& f : map.failures) err << "point failed: " << f << '\n';

  json m = manifest_base("sweep", o, lc, sc);
  m["masked_points"] = masked;
  m["failed_points"] = failed;
  m["nonconverged"] = map.nonconverged;
  m["clamped_points"] = map.clamped_points;
  write_manifest(dir, m, {coverage, summary, dir / "manifest.json"},
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
  out << "wrote " << coverage.string() << ", " << summary.string() << '\n';

  if (masked + failed > 0) {
    err << "completed with " << masked << " masked and " << failed << " failed points\n";
    return kPartial;
  }
  return kOk;
}

int cmd_optimize(const Options& o, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  LoadedConfig lc = load_with_overrides(o);
  ScenarioConfig scenario = load_scenario(lc.file);
  SweepConfig sc = load_sweep_config(lc.file, scenario);
  lc.file.require_all_used();

  const std::string regime_text = o.regime.value_or("bd-proj");
  if (regime_text == "none") throw ConfigError("optimize needs a RIS regime, not 'none'");
  const Regime regime = *parse_regime(regime_text);
  const Objective objective = parse_objective(o.objective.value_or("capacity")).value();
  lc.overrides["--regime"] = regime_text;
  lc.overrides["--objective"] = to_string(objective);
  lc.overrides["--ue-x"] = o.ue_x;
  lc.overrides["--ue-y"] = o.ue_y;
  sc.configurations = {SweepConfiguration{regime, objective, scenario.ris_elements()}};
  sc.validate();

  const Point2 ue{o.ue_x, o.ue_y};
  if (!scenario.area.contains(ue)) {
    throw OutOfBoundsError("UE position (" + fmt9(ue.x()) + ", " + fmt9(ue.y()) + ") lies outside the service area");
  }
  if ((ue - scenario.bs_position.head<2>()).norm() < sc.mask_radius ||
      (ue - scenario.ris_position.head<2>()).norm() < sc.mask_radius) {
    throw DegenerateGeometryError("UE position (" + fmt9(ue.x()) + ", " + fmt9(ue.y()) +
                                  ") is masked: too close to the BS or RIS");
  }
  const fs::path dir = prepare_output_dir(o.out_dir);

  const ChannelSet channels = build_channels(scenario, ue);
  OptimizerConfig oc = sc.optimizer;
  oc.seed = sc.global_seed;
  const OptimizeResult r = optimize(channels, objective, regime, oc, scenario.tx_power, scenario.noise_power);
  if (!r.trace.abort_reason.empty()) throw NumericalError("optimization aborted: " + r.trace.abort_reason);

  const fs::path trace = dir / "trace.csv";
  const fs::path theta = dir / "theta.txt";
  {
    std::ofstream f(trace);
    if (!f) throw std::runtime_error("cannot write " + trace.string());
    write_trace_csv(f, r.trace);
  }
  {
    std::ofstream f(theta);
    if (!f) throw std::runtime_error("cannot write " + theta.string());
    write_scatter_matrix(f, r.theta);
  }

  const double no_ris = evaluate_objective(channels.h_bu, objective, scenario.tx_power, scenario.noise_power);
  out << "regime " << to_string(regime) << ", objective " << to_string(objective) << ", N_r "
      << scenario.ris_elements() << ", UE (" << fmt9(ue.x()) << ", " << fmt9(ue.y()) << ")\n";
  out << "iterations " << r.trace.rows.size() << " (outer " << r.trace.outer_iterations << "), "
      << (r.converged() ? "converged" : "not converged") << '\n';
  out << "initial " << fmt9(r.trace.initial_objective) << " bit/s/Hz, without RIS " << fmt9(no_ris) << " bit/s/Hz\n";
  out << "final objective " << fmt9(r.objective) << " bit/s/Hz\n";
  if (!r.converged()) err << "warning: iteration limit reached before convergence\n";

  json m = manifest_base("optimize", o, lc, sc);
  m["ue_position"] = json::array({ue.x(), ue.y(), scenario.ue_height});
  m["seed"] = oc.seed;
  m["objective_value"] = r.objective;
  m["initial_objective"] = r.trace.initial_objective;
  m["iterations"] = r.trace.rows.size();
  m["converged"] = r.converged();
  m["degenerate_gradient_events"] = r.trace.degenerate_gradient_events;
  write_manifest(dir, m, {trace, theta, dir / "manifest.json"},
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
  return kOk;
}

int cmd_validate(std::uint64_t seed, std::ostream& out, const ValidationHooks& hooks) {
  const auto started = std::chrono::steady_clock::now();
  const std::vector<CheckResult> results = run_validation(hooks, seed);
  int failed = 0;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    failed += !r.passed;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  out << results.size() - failed << "/" << results.size() << " checks passed in " << fmt9(secs) << " s\n";
  return failed ? kValidationFailed : kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const ValidationHooks& hooks) {
  CLI::App app{"RIS-assisted MIMO downlink optimizer", "risopt"};
  app.set_version_flag("--version", software_version());
  app.require_subcommand(1);

  Options o;
  const std::vector<std::string> regimes{"none", "diag", "bd-proj", "bd-exp"};
  const std::vector<std::string> objectives{"txbf", "capacity"};
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "Scenario/optimizer config file")->required();
    sub->add_option("--out", o.out_dir, "Output directory (default $RISOPT_OUT_DIR or ./risopt_out)");
    sub->add_option("--nr", o.nr, "Number of RIS elements (multiple of ris_rows)");
    sub->add_option("--regime", o.regime, "RIS regime")->check(CLI::IsMember(regimes));
    sub->add_option("--objective", o.objective, "Objective")->check(CLI::IsMember(objectives));
    sub->add_option("--seed", o.seed, "Global seed")->check(CLI::NonNegativeNumber);
  };

  CLI::App* sweep = app.add_subcommand("sweep", "Coverage sweep over the service area");
  common(sweep);
  sweep->add_option("--grid-res", o.grid_res, "Grid resolution in metres")->check(CLI::PositiveNumber);
  sweep->add_option("--workers", o.workers, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);

  CLI::App* opt = app.add_subcommand("optimize", "Optimize Theta for one UE position");
  common(opt);
  opt->add_option("--ue-x", o.ue_x, "UE x coordinate in metres")->required();
  opt->add_option("--ue-y", o.ue_y, "UE y coordinate in metres")->required();

  CLI::App* val = app.add_subcommand("validate", "Run the gradient, manifold and waterfilling oracle checks");
  std::uint64_t validate_seed = 2024;
  val->add_option("--seed", validate_seed, "Seed for the random test instances");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*sweep) return cmd_sweep(o, out, err);
    if (*opt) return cmd_optimize(o, out, err);
    return cmd_validate(validate_seed, out, hooks);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const OutOfBoundsError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace cli
}  // namespace risopt
