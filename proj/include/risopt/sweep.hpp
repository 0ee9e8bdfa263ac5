#pragma once

#include "risopt/geometry.hpp"
#include "risopt/optimizer.hpp"
#include "risopt/scenario.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace risopt {

/// One column of a coverage map: no RIS (regime unset) or an optimized RIS.
struct SweepConfiguration {
  std::optional<Regime> regime;
  Objective objective = Objective::Capacity;
  int ris_elements = 0;  // ignored without a RIS

  /// "none-capacity", "bd-proj-capacity-1000", ...
  std::string id() const;
};

/// Parses "regime/objective[/N_r]" with regime in {none, diag, bd-proj, bd-exp}.
SweepConfiguration parse_configuration(const std::string& text, int default_ris_elements);

struct SweepConfig {
  ScenarioConfig scenario;
  OptimizerConfig optimizer;
  double grid_resolution = 1.0;  // m
  std::vector<SweepConfiguration> configurations;
  int workers = 0;  // 0: hardware concurrency
  std::uint64_t global_seed = 1;
  double mask_radius = 0.5;  // horizontal distance to BS or RIS centre

  void validate() const;
};

/// Reads sweep.* and optimizer.* keys.
SweepConfig load_sweep_config(ConfigFile& file, const ScenarioConfig& scenario);

/// Canonical text of every setting that influences results.
std::string describe(const SweepConfig& config);
std::uint64_t fnv1a64(const std::string& text);

/// Optimizer seed for one grid point and configuration; independent of the
/// worker count and of evaluation order.
std::uint64_t point_seed(std::uint64_t global_seed, std::size_t grid_index, const std::string& config_id);

enum class PointStatus : std::uint8_t { Valid, Masked, Failed };

/// Cell-centred grid over the service area, index = iy * nx + ix.
struct Grid {
  int nx = 0;
  int ny = 0;
  double resolution = 1.0;
  double x0 = 0.0;  // centre of the first cell
  double y0 = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  Point2 point(std::size_t index) const {
    return {x0 + resolution * static_cast<double>(index % nx), y0 + resolution * static_cast<double>(index / nx)};
  }
  bool operator==(const Grid& o) const {
    return nx == o.nx && ny == o.ny && resolution == o.resolution && x0 == o.x0 && y0 == o.y0;
  }
};

/// Throws ConfigError unless the area extent is a whole number of cells.
Grid make_grid(const AreaExtent& area, double resolution);

struct CoverageMap {
  Grid grid;
  std::vector<SweepConfiguration> configurations;
  std::vector<std::vector<double>> values;         // [configuration][point], bit/s/Hz; NaN unless Valid
  std::vector<std::vector<PointStatus>> status;    // [configuration][point]
  std::vector<std::string> failures;               // one message per failed (configuration, point)
  std::vector<int> nonconverged;                   // per configuration
  int clamped_points = 0;                          // points where the UMi distance clamp was active

  // Metadata
  std::string config_hash;
  std::uint64_t global_seed = 0;
  double runtime_seconds = 0.0;
  std::string software_version;
  std::string scenario_note;  // free text written into the CSV header

  std::size_t count(PointStatus s) const;
  int configuration_index(const std::string& id) const;  // -1 if absent
};

/// Evaluates every configuration at every grid point on a worker pool.
/// Per-point errors mark the point Failed instead of aborting.
CoverageMap run_sweep(const SweepConfig& config);

/// Points whose BS -> UE segment crosses the obstacle.
std::vector<bool> behind_obstacle_mask(const Grid& grid, const ScenarioConfig& scenario);

struct Peak {
  double value = 0.0;
  Point2 at{0.0, 0.0};
  int valid_points = 0;
};

/// Max over valid points, optionally restricted to `region`. Throws
/// std::invalid_argument if nothing is left to take the max over.
Peak peak_value(const CoverageMap& map, std::size_t configuration, const std::vector<bool>* region = nullptr);

struct SummaryRow {
  std::string config_id;
  std::string region;
  Peak peak;
  std::string reference_id;
  double reference_peak = 0.0;
  double gain_percent = 0.0;
};

/// Peak and percentage gain of each configuration of `map` against the
/// no-RIS configuration with the same objective in `reference` (or the
/// first configuration of `reference` if there is none).
std::vector<SummaryRow> summarize(const CoverageMap& map, const CoverageMap& reference,
                                  const std::vector<bool>* region = nullptr, const std::string& region_name = "all");

/// `# key = value` metadata lines, then x,y,config_id,spectral_efficiency.
/// Values use 9 significant digits; masked and failed points are written as nan.
void write_coverage_csv(std::ostream& out, const CoverageMap& map);
CoverageMap read_coverage_csv(std::istream& in);

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace risopt
