#pragma once

#include "risopt/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace risopt {

/// Azimuth/elevation orientation of an array or panel, in radians.
///
/// Azimuth is measured counter-clockwise from the +y axis in the horizontal
/// plane; elevation is the polar angle from +z. The boresight (or panel
/// normal) is therefore (-sin(az) sin(el), cos(az) sin(el), cos(el)).
struct Tilt {
  double azimuth = 0.0;
  double elevation = kPi / 2;

  Point3 boresight() const;
  /// Horizontal unit vector perpendicular to the boresight.
  Point3 horizontal_axis() const;
  /// Completes the right-handed local frame: horizontal_axis x boresight.
  Point3 vertical_axis() const;
};

struct AreaExtent {
  double x_min = 0.0;
  double x_max = 60.0;
  double y_min = 0.0;
  double y_max = 60.0;

  bool contains(const Point2& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
  }
};

struct Obstacle {
  Point2 start;
  Point2 end;
  double attenuation = 1.0;  // linear power factor in (0, 1]
};

/// Physical scenario. Every quantity is stored in linear SI units; dB-valued
/// inputs are converted exactly once by load_scenario().
struct ScenarioConfig {
  double carrier_frequency = 30e9;  // Hz
  double tx_power = 0.0;            // W
  double noise_power = 0.0;         // W
  double bandwidth = 50e6;          // Hz

  Point3 bs_position{30.0, 60.0, 10.0};
  Tilt bs_tilt{kPi, kPi / 2};
  Point3 ris_position{0.0, 40.0, 6.0};
  Tilt ris_tilt{-kPi / 2, kPi / 2};
  double ue_height = 1.5;

  int bs_antennas = 4;
  int ue_antennas = 2;
  double antenna_spacing = 0.005;  // m

  int ris_rows = 5;   // N_z
  int ris_cols = 2;   // N_y
  double ris_element_width = 0.005;   // a, m (horizontal pitch)
  double ris_element_height = 0.005;  // b, m (vertical pitch)

  double bs_gain = 1.0;  // linear
  double ue_gain = 1.0;  // linear
  /// When false the direct BS-UE link uses isotropic antennas; G_t and G_u
  /// then only enter the RIS element gains.
  bool direct_link_antenna_gains = false;

  /// Distances below this are clamped in the UMi pathloss formula.
  double pathloss_min_distance = 10.0;

  AreaExtent area;
  std::optional<Obstacle> obstacle;

  int ris_elements() const { return ris_rows * ris_cols; }
  double wavelength() const { return kSpeedOfLight / carrier_frequency; }

  /// Throws ConfigError if any invariant is violated, including the UMi
  /// breakpoint distance falling inside the service area.
  void validate() const;
};

/// Reference microcell scenario (30 GHz, 24 dBm, -94 dBm, 3 dBi, 5 x n_r/5 RIS).
ScenarioConfig table1_scenario(int n_ris = 10);

/// Copy of `config` with the panel resized to `n_ris` elements, keeping the
/// row count. Throws ConfigError if `n_ris` is not a multiple of the rows.
ScenarioConfig with_ris_elements(ScenarioConfig config, int n_ris);

/// UMi breakpoint distance d'_BP = 4 h'_BS h'_UT f_c / c with 1 m effective
/// environment height.
double umi_breakpoint_distance(const ScenarioConfig& config);

/// Line-oriented `key = value` file with '#' comments. Every entry remembers
/// its line so that diagnostics can point at it.
class ConfigFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
  };

  static ConfigFile parse(const std::string& text, const std::string& origin = "<string>");
  static ConfigFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::string& origin() const { return origin_; }

  std::optional<std::string> get_string(const std::string& key);
  std::optional<double> get_double(const std::string& key);
  std::optional<int> get_int(const std::string& key);
  std::optional<bool> get_bool(const std::string& key);
  std::optional<std::vector<double>> get_doubles(const std::string& key, std::size_t count);
  std::optional<std::vector<std::string>> get_list(const std::string& key);

  /// Sets or replaces a value (used for command-line overrides).
  void set(const std::string& key, const std::string& value);

  /// Throws ConfigError naming the first entry nobody consumed.
  void require_all_used() const;

  const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  std::string origin_;
  std::map<std::string, Entry> entries_;
};

inline constexpr int kConfigFormatVersion = 1;

/// Reads the scenario keys from `file` (other sections are left untouched).
ScenarioConfig load_scenario(ConfigFile& file);

}  // namespace risopt
