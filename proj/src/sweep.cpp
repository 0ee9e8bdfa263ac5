#include "risopt/sweep.hpp"
#include "risopt/version.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace risopt {

std::string SweepConfiguration::id() const {
  if (!regime) return "none-" + to_string(objective);
  return to_string(*regime) + "-" + to_string(objective) + "-" + std::to_string(ris_elements);
}

namespace {

std::string spec_text(const SweepConfiguration& c) {
  if (!c.regime) return "none/" + to_string(c.objective);
  return to_string(*c.regime) + "/" + to_string(c.objective) + "/" + std::to_string(c.ris_elements);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

SweepConfiguration parse_configuration(const std::string& text, int default_ris_elements) {
  const auto parts = split(text, '/');
  if (parts.size() < 2 || parts.size() > 3) {
    throw ConfigError("configuration '" + text + "' must look like regime/objective[/N_r]");
  }
  SweepConfiguration c;
  const auto objective = parse_objective(parts[1]);
  if (!objective) throw ConfigError("configuration '" + text + "': unknown objective '" + parts[1] + "'");
  c.objective = *objective;
  if (parts[0] == "none") {
    if (parts.size() == 3) throw ConfigError("configuration '" + text + "': no-RIS entries take no element count");
    return c;
  }
  const auto regime = parse_regime(parts[0]);
  if (!regime) throw ConfigError("configuration '" + text + "': unknown regime '" + parts[0] + "'");
  c.regime = *regime;
  c.ris_elements = default_ris_elements;
  if (parts.size() == 3) {
    try {
      std::size_t used = 0;
      c.ris_elements = std::stoi(parts[2], &used);
      if (used != parts[2].size()) throw std::invalid_argument(parts[2]);
    } catch (const std::exception&) {
      throw ConfigError("configuration '" + text + "': bad element count '" + parts[2] + "'");
    }
  }
  return c;
}

void SweepConfig::validate() const {
  scenario.validate();
  optimizer.validate();
  if (!(grid_resolution > 0.0)) throw ConfigError("grid resolution must be > 0");
  if (configurations.empty()) throw ConfigError("sweep needs at least one configuration");
  if (workers < 0) throw ConfigError("worker count must be >= 0");
  if (!(mask_radius >= 0.0)) throw ConfigError("mask radius must be >= 0");
  std::map<std::string, int> seen;
  for (const auto& c : configurations) {
    if (c.regime) with_ris_elements(scenario, c.ris_elements);  // throws on a bad element count
    if (seen[c.id()]++) throw ConfigError("duplicate configuration '" + c.id() + "'");
  }
  make_grid(scenario.area, grid_resolution);
}

SweepConfig load_sweep_config(ConfigFile& file, const ScenarioConfig& scenario) {
  SweepConfig s;
  s.scenario = scenario;
  OptimizerConfig& o = s.optimizer;
  if (auto v = file.get_string("optimizer.method")) {
    if (*v != "auto") {
      const auto m = parse_method(*v);
      if (!m) throw ConfigError(file.origin() + ": optimizer.method: unknown method '" + *v + "'");
      o.method = *m;
    }
  }
  if (auto v = file.get_double("optimizer.step_size")) o.step_size = *v;
  if (auto v = file.get_double("optimizer.momentum")) o.momentum = *v;
  if (auto v = file.get_double("optimizer.rmsprop_decay")) o.rmsprop_decay = *v;
  if (auto v = file.get_double("optimizer.adam_beta1")) o.adam_beta1 = *v;
  if (auto v = file.get_double("optimizer.adam_beta2")) o.adam_beta2 = *v;
  if (auto v = file.get_double("optimizer.adam_epsilon")) o.adam_epsilon = *v;
  if (auto v = file.get_double("optimizer.inner_tol")) o.inner_tol = *v;
  if (auto v = file.get_double("optimizer.outer_tol")) o.outer_tol = *v;
  if (auto v = file.get_int("optimizer.max_inner_iters")) o.max_inner_iters = *v;
  if (auto v = file.get_int("optimizer.max_outer_iters")) o.max_outer_iters = *v;

  if (auto v = file.get_double("sweep.grid_resolution")) s.grid_resolution = *v;
  if (auto v = file.get_int("sweep.workers")) s.workers = *v;
  if (auto v = file.get_int("sweep.seed")) {
    if (*v < 0) throw ConfigError(file.origin() + ": sweep.seed must be >= 0");
    s.global_seed = static_cast<std::uint64_t>(*v);
  }
  if (auto v = file.get_double("sweep.mask_radius")) s.mask_radius = *v;
  const auto list = file.get_list("sweep.configurations");
  if (list) {
    for (const auto& item : *list) s.configurations.push_back(parse_configuration(item, scenario.ris_elements()));
  } else {
    s.configurations.push_back(parse_configuration("none/capacity", scenario.ris_elements()));
  }
  return s;
}

std::string describe(const SweepConfig& c) {
  const ScenarioConfig& s = c.scenario;
  const OptimizerConfig& o = c.optimizer;
  std::ostringstream out;
  out.precision(17);
  out << "carrier_frequency=" << s.carrier_frequency << "\ntx_power=" << s.tx_power << "\nnoise_power=" << s.noise_power
      << "\nbandwidth=" << s.bandwidth << "\nbs_position=" << s.bs_position.transpose()
      << "\nbs_tilt=" << s.bs_tilt.azimuth << ' ' << s.bs_tilt.elevation << "\nris_position=" << s.ris_position.transpose()
      << "\nris_tilt=" << s.ris_tilt.azimuth << ' ' << s.ris_tilt.elevation << "\nue_height=" << s.ue_height
      << "\nbs_antennas=" << s.bs_antennas << "\nue_antennas=" << s.ue_antennas
      << "\nantenna_spacing=" << s.antenna_spacing << "\nris_rows=" << s.ris_rows << "\nris_cols=" << s.ris_cols
      << "\nris_element=" << s.ris_element_width << ' ' << s.ris_element_height << "\nbs_gain=" << s.bs_gain
      << "\nue_gain=" << s.ue_gain << "\ndirect_link_antenna_gains=" << s.direct_link_antenna_gains
      << "\npathloss_min_distance=" << s.pathloss_min_distance << "\narea=" << s.area.x_min << ' ' << s.area.x_max << ' '
      << s.area.y_min << ' ' << s.area.y_max;
  if (s.obstacle) {
    out << "\nobstacle=" << s.obstacle->start.transpose() << ' ' << s.obstacle->end.transpose() << ' '
        << s.obstacle->attenuation;
  }
  out << "\noptimizer.method=" << (o.method ? to_string(*o.method) : std::string("auto"))
      << "\noptimizer.step_size=" << o.step_size << "\noptimizer.momentum=" << o.momentum
      << "\noptimizer.rmsprop_decay=" << o.rmsprop_decay << "\noptimizer.rmsprop_epsilon=" << o.rmsprop_epsilon
      << "\noptimizer.adam=" << o.adam_beta1 << ' ' << o.adam_beta2 << ' ' << o.adam_epsilon
      << "\noptimizer.inner_tol=" << o.inner_tol << "\noptimizer.outer_tol=" << o.outer_tol
      << "\noptimizer.max_inner_iters=" << o.max_inner_iters << "\noptimizer.max_outer_iters=" << o.max_outer_iters
      << "\nsweep.grid_resolution=" << c.grid_resolution << "\nsweep.seed=" << c.global_seed
      << "\nsweep.mask_radius=" << c.mask_radius << "\nsweep.configurations=";
  for (const auto& cfg : c.configurations) out << spec_text(cfg) << ' ';
  out << '\n';
  return out.str();
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t point_seed(std::uint64_t global_seed, std::size_t grid_index, const std::string& config_id) {
  std::uint64_t h = splitmix64(global_seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(grid_index));
  return splitmix64(h ^ fnv1a64(config_id));
}

Grid make_grid(const AreaExtent& area, double resolution) {
  if (!(resolution > 0.0)) throw ConfigError("grid resolution must be > 0");
  auto cells = [&](double extent) {
    const double n = extent / resolution;
    const double rounded = std::round(n);
    if (rounded < 1.0 || std::abs(n - rounded) > 1e-9 * std::max(1.0, n)) {
      throw ConfigError("area extent " + fmt9(extent) + " m is not a whole number of " + fmt9(resolution) +
                        " m grid cells");
    }
    return static_cast<int>(rounded);
  };
  Grid g;
  g.nx = cells(area.x_max - area.x_min);
  g.ny = cells(area.y_max - area.y_min);
  g.resolution = resolution;
  g.x0 = area.x_min + 0.5 * resolution;
  g.y0 = area.y_min + 0.5 * resolution;
  return g;
}

std::size_t CoverageMap::count(PointStatus s) const {
  std::size_t n = 0;
  for (const auto& col : status)
    for (PointStatus p : col) n += (p == s);
  return n;
}

int CoverageMap::configuration_index(const std::string& id) const {
  for (std::size_t i = 0; i < configurations.size(); ++i)
    if (configurations[i].id() == id) return static_cast<int>(i);
  return -1;
}

CoverageMap run_sweep(const SweepConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();

  CoverageMap map;
  map.grid = make_grid(config.scenario.area, config.grid_resolution);
  map.configurations = config.configurations;
  map.global_seed = config.global_seed;
  map.config_hash = [&] {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(describe(config))));
    return std::string(buf);
  }();
  map.software_version = software_version();

  const std::size_t n_points = map.grid.size();
  const std::size_t n_configs = config.configurations.size();
  map.values.assign(n_configs, std::vector<double>(n_points, std::numeric_limits<double>::quiet_NaN()));
  map.status.assign(n_configs, std::vector<PointStatus>(n_points, PointStatus::Valid));
  map.nonconverged.assign(n_configs, 0);

  // Scenario per distinct element count.
  std::map<int, ScenarioConfig> scenarios;
  scenarios.emplace(config.scenario.ris_elements(), config.scenario);
  for (const auto& c : config.configurations)
    if (c.regime && !scenarios.count(c.ris_elements))
      scenarios.emplace(c.ris_elements, with_ris_elements(config.scenario, c.ris_elements));

  std::vector<std::vector<std::string>> point_failures(n_points);
  std::vector<std::vector<char>> point_nonconverged(n_points, std::vector<char>(n_configs, 0));
  std::vector<char> point_clamped(n_points, 0);

  const Point2 bs2 = config.scenario.bs_position.head<2>();
  const Point2 ris2 = config.scenario.ris_position.head<2>();
  const double p = config.scenario.tx_power;
  const double noise = config.scenario.noise_power;

  auto evaluate_point = [&](std::size_t index) {
    const Point2 ue = map.grid.point(index);
    if ((ue - bs2).norm() < config.mask_radius || (ue - ris2).norm() < config.mask_radius) {
      for (std::size_t c = 0; c < n_configs; ++c) map.status[c][index] = PointStatus::Masked;
      return;
    }
    std::map<int, ChannelSet> channels;
    for (std::size_t c = 0; c < n_configs; ++c) {
      const SweepConfiguration& cfg = config.configurations[c];
      try {
        const int key = cfg.regime ? cfg.ris_elements : config.scenario.ris_elements();
        auto it = channels.find(key);
        if (it == channels.end()) it = channels.emplace(key, build_channels(scenarios.at(key), ue)).first;
        const ChannelSet& ch = it->second;
        if (ch.pathloss_clamped) point_clamped[index] = 1;
        double value = 0.0;
        if (!cfg.regime) {
          value = evaluate_objective(ch.h_bu, cfg.objective, p, noise);
        } else {
          OptimizerConfig oc = config.optimizer;
          oc.seed = point_seed(config.global_seed, index, cfg.id());
          const OptimizeResult r = optimize(ch, cfg.objective, *cfg.regime, oc, p, noise);
          if (!r.trace.abort_reason.empty()) throw NumericalError(r.trace.abort_reason);
          if (!r.converged()) point_nonconverged[index][c] = 1;
          value = r.objective;
        }
        if (!std::isfinite(value) || value < 0.0) throw NumericalError("objective is not a finite non-negative value");
        map.values[c][index] = value;
      } catch (const std::exception& e) {
        map.status[c][index] = PointStatus::Failed;
        std::ostringstream msg;
        msg << cfg.id() << " at (" << fmt9(ue.x()) << ", " << fmt9(ue.y()) << "): " << e.what();
        point_failures[index].push_back(msg.str());
      }
    }
  };

  unsigned workers = config.workers > 0 ? static_cast<unsigned>(config.workers) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_points)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_points; i = next++) evaluate_point(i);
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (std::size_t i = 0; i < n_points; ++i) {
    for (auto& f : point_failures[i]) map.failures.push_back(std::move(f));
    for (std::size_t c = 0; c < n_configs; ++c) map.nonconverged[c] += point_nonconverged[i][c];
    map.clamped_points += point_clamped[i];
  }

  auto coords = [](const auto& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt9(v(i));
    return s;
  };
  map.scenario_note = "bs=" + coords(config.scenario.bs_position) + " ris=" + coords(config.scenario.ris_position);
  if (config.scenario.obstacle) {
    map.scenario_note +=
        " obstacle=" + coords(config.scenario.obstacle->start) + "," + coords(config.scenario.obstacle->end);
  }
  map.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return map;
}

std::vector<bool> behind_obstacle_mask(const Grid& grid, const ScenarioConfig& scenario) {
  std::vector<bool> mask(grid.size(), false);
  for (std::size_t i = 0; i < grid.size(); ++i) mask[i] = direct_path_obstructed(scenario, grid.point(i));
  return mask;
}

Peak peak_value(const CoverageMap& map, std::size_t configuration, const std::vector<bool>* region) {
  if (configuration >= map.configurations.size()) throw std::out_of_range("configuration index out of range");
  if (region && region->size() != map.grid.size()) throw std::invalid_argument("region mask does not match the grid");
  Peak best;
  best.value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < map.grid.size(); ++i) {
    if (region && !(*region)[i]) continue;
    if (map.status[configuration][i] != PointStatus::Valid) continue;
    ++best.valid_points;
    if (map.values[configuration][i] > best.value) {
      best.value = map.values[configuration][i];
      best.at = map.grid.point(i);
    }
  }
  if (best.valid_points == 0) throw std::invalid_argument("no valid points in the selected region");
  return best;
}

std::vector<SummaryRow> summarize(const CoverageMap& map, const CoverageMap& reference,
                                  const std::vector<bool>* region, const std::string& region_name) {
  if (!(map.grid == reference.grid)) throw std::invalid_argument("maps do not share a grid");
  if (reference.configurations.empty()) throw std::invalid_argument("reference map has no configurations");
  std::vector<SummaryRow> rows;
  for (std::size_t c = 0; c < map.configurations.size(); ++c) {
    const SweepConfiguration& cfg = map.configurations[c];
    std::size_t ref = 0;
    for (std::size_t r = 0; r < reference.configurations.size(); ++r) {
      if (!reference.configurations[r].regime && reference.configurations[r].objective == cfg.objective) {
        ref = r;
        break;
      }
    }
    SummaryRow row;
    row.config_id = cfg.id();
    row.region = region_name;
    row.peak = peak_value(map, c, region);
    row.reference_id = reference.configurations[ref].id();
    row.reference_peak = peak_value(reference, ref, region).value;
    row.gain_percent = (row.peak.value - row.reference_peak) / row.reference_peak * 100.0;
    rows.push_back(row);
  }
  return rows;
}

void write_coverage_csv(std::ostream& out, const CoverageMap& map) {
  out << "# risopt coverage map\n";
  out << "# format_version = 1\n";
  out << "# software_version = " << map.software_version << '\n';
  out << "# config_hash = " << map.config_hash << '\n';
  out << "# global_seed = " << map.global_seed << '\n';
  out << "# grid = " << map.grid.nx << ' ' << map.grid.ny << ' ' << fmt9(map.grid.resolution) << ' '
      << fmt9(map.grid.x0) << ' ' << fmt9(map.grid.y0) << '\n';
  out << "# configurations =";
  for (const auto& c : map.configurations) out << ' ' << spec_text(c);
  out << '\n';
  out << "# scenario = " << map.scenario_note << '\n';
  out << "# masked_points = " << map.count(PointStatus::Masked) << '\n';
  out << "# failed_points = " << map.count(PointStatus::Failed) << '\n';
  out << "# pathloss_clamped_points = " << map.clamped_points << '\n';
  out << "# nonconverged =";
  for (int n : map.nonconverged) out << ' ' << n;
  out << '\n';
  out << "x,y,config_id,spectral_efficiency\n";
  for (std::size_t c = 0; c < map.configurations.size(); ++c) {
    const std::string id = map.configurations[c].id();
    for (std::size_t i = 0; i < map.grid.size(); ++i) {
      const Point2 p = map.grid.point(i);
      out << fmt9(p.x()) << ',' << fmt9(p.y()) << ',' << id << ',';
      if (map.status[c][i] == PointStatus::Valid) {
        out << fmt9(map.values[c][i]);
      } else {
        out << "nan";
      }
      out << '\n';
    }
  }
}

CoverageMap read_coverage_csv(std::istream& in) {
  CoverageMap map;
  std::string line;
  int line_no = 0;
  bool have_grid = false;
  bool header_seen = false;
  std::map<std::string, std::size_t> config_index;
  std::vector<std::vector<char>> seen;
  auto fail = [&](const std::string& what) -> void {
    throw ConfigError("coverage CSV line " + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      key.erase(key.find_last_not_of(' ') + 1);
      std::istringstream value(line.substr(eq + 1));
      if (key == "grid") {
        if (!(value >> map.grid.nx >> map.grid.ny >> map.grid.resolution >> map.grid.x0 >> map.grid.y0))
          fail("malformed grid metadata");
        have_grid = true;
      } else if (key == "configurations") {
        std::string item;
        while (value >> item) map.configurations.push_back(parse_configuration(item, 0));
      } else if (key == "config_hash") {
        value >> map.config_hash;
      } else if (key == "global_seed") {
        value >> map.global_seed;
      } else if (key == "software_version") {
        value >> map.software_version;
      } else if (key == "scenario") {
        std::getline(value >> std::ws, map.scenario_note);
      }
      continue;
    }
    if (!header_seen) {
      if (line != "x,y,config_id,spectral_efficiency") fail("expected the column header");
      if (!have_grid || map.configurations.empty()) fail("grid or configuration metadata missing before header");
      header_seen = true;
      const std::size_t n = map.grid.size();
      map.values.assign(map.configurations.size(), std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
      map.status.assign(map.configurations.size(), std::vector<PointStatus>(n, PointStatus::Masked));
      seen.assign(map.configurations.size(), std::vector<char>(n, 0));
      map.nonconverged.assign(map.configurations.size(), 0);
      for (std::size_t c = 0; c < map.configurations.size(); ++c) config_index[map.configurations[c].id()] = c;
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 4) fail("expected 4 fields");
    double x = 0.0, y = 0.0;
    try {
      x = std::stod(fields[0]);
      y = std::stod(fields[1]);
    } catch (const std::exception&) {
      fail("bad coordinate");
    }
    const auto it = config_index.find(fields[2]);
    if (it == config_index.end()) fail("unknown configuration '" + fields[2] + "'");
    const double fx = (x - map.grid.x0) / map.grid.resolution;
    const double fy = (y - map.grid.y0) / map.grid.resolution;
    const long ix = std::lround(fx);
    const long iy = std::lround(fy);
    if (ix < 0 || iy < 0 || ix >= map.grid.nx || iy >= map.grid.ny || std::abs(fx - ix) > 1e-6 ||
        std::abs(fy - iy) > 1e-6) {
      fail("point (" + fields[0] + ", " + fields[1] + ") is not on the grid");
    }
    const std::size_t index = static_cast<std::size_t>(iy) * map.grid.nx + static_cast<std::size_t>(ix);
    const std::size_t c = it->second;
    if (seen[c][index]) fail("duplicate point");
    seen[c][index] = 1;
    if (fields[3] == "nan") continue;
    try {
      map.values[c][index] = std::stod(fields[3]);
    } catch (const std::exception&) {
      fail("bad spectral efficiency '" + fields[3] + "'");
    }
    map.status[c][index] = PointStatus::Valid;
  }
  if (!header_seen) throw ConfigError("coverage CSV has no data header");
  for (std::size_t c = 0; c < seen.size(); ++c) {
    for (std::size_t i = 0; i < seen[c].size(); ++i) {
      if (!seen[c][i]) {
        const Point2 p = map.grid.point(i);
        throw ConfigError("coverage CSV is missing point (" + fmt9(p.x()) + ", " + fmt9(p.y()) + ") for " +
                          map.configurations[c].id());
      }
    }
  }
  return map;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "config_id,region,peak_spectral_efficiency,peak_x,peak_y,valid_points,reference_id,reference_peak,"
         "gain_percent\n";
  for (const auto& r : rows) {
    out << r.config_id << ',' << r.region << ',' << fmt9(r.peak.value) << ',' << fmt9(r.peak.at.x()) << ','
        << fmt9(r.peak.at.y()) << ',' << r.peak.valid_points << ',' << r.reference_id << ','
        << fmt9(r.reference_peak) << ',' << fmt9(r.gain_percent) << '\n';
  }
}

}  // namespace risopt
