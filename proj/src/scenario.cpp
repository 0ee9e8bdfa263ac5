#include "risopt/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace risopt {

Point3 Tilt::boresight() const {
  return {-std::sin(azimuth) * std::sin(elevation), std::cos(azimuth) * std::sin(elevation),
          std::cos(elevation)};
}

Point3 Tilt::horizontal_axis() const { return {std::cos(azimuth), std::sin(azimuth), 0.0}; }

Point3 Tilt::vertical_axis() const { return horizontal_axis().cross(boresight()); }

double umi_breakpoint_distance(const ScenarioConfig& config) {
  const double h_bs = config.bs_position.z() - 1.0;
  const double h_ut = config.ue_height - 1.0;
  return 4.0 * h_bs * h_ut * config.carrier_frequency / kSpeedOfLight;
}

void ScenarioConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(carrier_frequency, "carrier frequency");
  positive(tx_power, "transmit power");
  positive(noise_power, "noise power");
  positive(bandwidth, "bandwidth");
  positive(antenna_spacing, "antenna spacing");
  positive(ris_element_width, "RIS element width");
  positive(ris_element_height, "RIS element height");
  positive(bs_gain, "BS antenna gain");
  positive(ue_gain, "UE antenna gain");
  positive(pathloss_min_distance, "pathloss minimum distance");
  if (bs_antennas < 1) throw ConfigError("bs_antennas must be >= 1");
  if (ue_antennas < 1) throw ConfigError("ue_antennas must be >= 1");
  if (ris_rows < 1 || ris_cols < 1) throw ConfigError("RIS must have at least one row and column");
  if (!(area.x_max > area.x_min) || !(area.y_max > area.y_min))
    throw ConfigError("area extent is empty");
  if (obstacle) {
    if (!(obstacle->attenuation > 0.0) || obstacle->attenuation > 1.0)
      throw ConfigError("obstacle attenuation must be a non-negative dB value");
    if ((obstacle->end - obstacle->start).norm() == 0.0)
      throw ConfigError("obstacle segment has zero length");
  }

  // Only the pre-breakpoint LOS expression is implemented.
  const Point2 bs2 = bs_position.head<2>();
  double farthest = 0.0;
  for (double x : {area.x_min, area.x_max})
    for (double y : {area.y_min, area.y_max}) farthest = std::max(farthest, (Point2{x, y} - bs2).norm());
  const double d_bp = umi_breakpoint_distance(*this);
  if (!(d_bp > farthest)) {
    std::ostringstream msg;
    msg << "UMi breakpoint distance " << d_bp << " m lies inside the service area (farthest point "
        << farthest << " m); only the pre-breakpoint LOS pathloss is supported";
    throw ConfigError(msg.str());
  }
}

ScenarioConfig table1_scenario(int n_ris) {
  ScenarioConfig c;
  c.carrier_frequency = 30e9;
  c.tx_power = dbm_to_watt(24.0);
  c.noise_power = dbm_to_watt(-94.0);
  c.bandwidth = 50e6;
  c.bs_position = {30.0, 60.0, 10.0};
  c.bs_tilt = {kPi, kPi / 2};
  c.ris_position = {0.0, 40.0, 6.0};
  c.ris_tilt = {-kPi / 2, kPi / 2};
  c.ue_height = 1.5;
  c.bs_antennas = 4;
  c.ue_antennas = 2;
  const double lambda = c.wavelength();
  c.antenna_spacing = 0.5 * lambda;
  c.ris_element_width = 0.5 * lambda;
  c.ris_element_height = 0.5 * lambda;
  c.bs_gain = db_to_linear(3.0);
  c.ue_gain = db_to_linear(3.0);
  c.ris_rows = 5;
  c = with_ris_elements(c, n_ris);
  return c;
}

ScenarioConfig with_ris_elements(ScenarioConfig config, int n_ris) {
  if (n_ris < 1 || n_ris % config.ris_rows != 0) {
    throw ConfigError("RIS element count " + std::to_string(n_ris) + " is not a positive multiple of " +
                      std::to_string(config.ris_rows) + " rows");
  }
  config.ris_cols = n_ris / config.ris_rows;
  return config;
}

// ---------------------------------------------------------------------------
// ConfigFile

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool parse_number(const std::string& tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
  ConfigFile file;
  file.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    if (file.entries_.count(key)) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "' (first on line " +
                        std::to_string(file.entries_[key].line) + ")");
    }
    file.entries_[key] = Entry{value, line_no, false};
  }
  return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void ConfigFile::fail(const std::string& key, const std::string& what) const {
  const auto it = entries_.find(key);
  const std::string where = it == entries_.end() ? origin_ : origin_ + ":" + std::to_string(it->second.line);
  throw ConfigError(where + ": " + key + ": " + what);
}

std::optional<std::string> ConfigFile::get_string(const std::string& key) {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  it->second.used = true;
  return it->second.value;
}

std::optional<std::vector<double>> ConfigFile::get_doubles(const std::string& key, std::size_t count) {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  std::replace(s->begin(), s->end(), ',', ' ');
  const auto toks = split_ws(*s);
  if (toks.size() != count) {
    fail(key, "expected " + std::to_string(count) + " numbers, got " + std::to_string(toks.size()));
  }
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!parse_number(toks[i], out[i]) || !std::isfinite(out[i])) fail(key, "'" + toks[i] + "' is not a number");
  }
  return out;
}

std::optional<double> ConfigFile::get_double(const std::string& key) {
  const auto v = get_doubles(key, 1);
  if (!v) return std::nullopt;
  return (*v)[0];
}

std::optional<int> ConfigFile::get_int(const std::string& key) {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  int out = 0;
  const auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), out);
  if (ec != std::errc() || ptr != s->data() + s->size()) fail(key, "'" + *s + "' is not an integer");
  return out;
}

std::optional<bool> ConfigFile::get_bool(const std::string& key) {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  if (*s == "true" || *s == "1" || *s == "yes") return true;
  if (*s == "false" || *s == "0" || *s == "no") return false;
  fail(key, "'" + *s + "' is not a boolean");
}

std::optional<std::vector<std::string>> ConfigFile::get_list(const std::string& key) {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  std::replace(s->begin(), s->end(), ',', ' ');
  return split_ws(*s);
}

void ConfigFile::set(const std::string& key, const std::string& value) {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    entries_[key] = Entry{value, 0, false};
  } else {
    it->second.value = value;
  }
}

void ConfigFile::require_all_used() const {
  for (const auto& [key, entry] : entries_) {
    if (!entry.used) {
      throw ConfigError(origin_ + ":" + std::to_string(entry.line) + ": unknown key '" + key + "'");
    }
  }
}

ScenarioConfig load_scenario(ConfigFile& file) {
  if (const auto v = file.get_int("format_version"); v && *v != kConfigFormatVersion) {
    throw ConfigError(file.origin() + ": unsupported format_version " + std::to_string(*v) + " (expected " +
                      std::to_string(kConfigFormatVersion) + ")");
  }

  ScenarioConfig c = table1_scenario(10);
  if (auto v = file.get_double("carrier_frequency_ghz")) c.carrier_frequency = *v * 1e9;
  if (auto v = file.get_double("tx_power_dbm")) c.tx_power = dbm_to_watt(*v);
  if (auto v = file.get_double("noise_power_dbm")) c.noise_power = dbm_to_watt(*v);
  if (auto v = file.get_double("bandwidth_mhz")) c.bandwidth = *v * 1e6;

  if (auto v = file.get_doubles("bs_position", 3)) c.bs_position = {(*v)[0], (*v)[1], (*v)[2]};
  if (auto v = file.get_doubles("bs_tilt_deg", 2)) c.bs_tilt = {(*v)[0] * kPi / 180, (*v)[1] * kPi / 180};
  if (auto v = file.get_doubles("ris_position", 3)) c.ris_position = {(*v)[0], (*v)[1], (*v)[2]};
  if (auto v = file.get_doubles("ris_tilt_deg", 2)) c.ris_tilt = {(*v)[0] * kPi / 180, (*v)[1] * kPi / 180};
  if (auto v = file.get_double("ue_height")) c.ue_height = *v;

  if (auto v = file.get_int("bs_antennas")) c.bs_antennas = *v;
  if (auto v = file.get_int("ue_antennas")) c.ue_antennas = *v;

  const double lambda = c.wavelength();
  c.antenna_spacing = 0.5 * lambda;
  c.ris_element_width = 0.5 * lambda;
  c.ris_element_height = 0.5 * lambda;
  if (auto v = file.get_double("antenna_spacing_wavelengths")) c.antenna_spacing = *v * lambda;
  if (auto v = file.get_doubles("ris_element_wavelengths", 2)) {
    c.ris_element_width = (*v)[0] * lambda;
    c.ris_element_height = (*v)[1] * lambda;
  }

  if (auto v = file.get_int("ris_rows")) c.ris_rows = *v;
  if (auto v = file.get_int("ris_elements")) {
    if (c.ris_rows < 1) throw ConfigError(file.origin() + ": ris_rows must be >= 1");
    c = with_ris_elements(c, *v);
  }

  if (auto v = file.get_double("bs_gain_dbi")) c.bs_gain = db_to_linear(*v);
  if (auto v = file.get_double("ue_gain_dbi")) c.ue_gain = db_to_linear(*v);
  if (auto v = file.get_bool("direct_link_antenna_gains")) c.direct_link_antenna_gains = *v;
  if (auto v = file.get_double("pathloss_min_distance")) c.pathloss_min_distance = *v;

  if (auto v = file.get_doubles("area", 4)) c.area = {(*v)[0], (*v)[1], (*v)[2], (*v)[3]};

  if (auto v = file.get_doubles("obstacle", 4)) {
    Obstacle o;
    o.start = {(*v)[0], (*v)[1]};
    o.end = {(*v)[2], (*v)[3]};
    const double att_db = file.get_double("obstacle_attenuation_db").value_or(10.0);
    if (att_db < 0.0) throw ConfigError(file.origin() + ": obstacle_attenuation_db must be >= 0");
    o.attenuation = db_to_linear(-att_db);
    c.obstacle = o;
  } else if (file.has("obstacle_attenuation_db")) {
    file.get_double("obstacle_attenuation_db");
    throw ConfigError(file.origin() + ": obstacle_attenuation_db given without obstacle");
  }

  c.validate();
  return c;
}

}  // namespace risopt
