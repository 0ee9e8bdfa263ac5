#pragma once

#include "risopt/scenario.hpp"
#include "risopt/types.hpp"

#include <vector>

namespace risopt {

/// Element coordinates for one UE placement.
struct ElementLayout {
  std::vector<Point3> bs;   // M antennas
  std::vector<Point3> ris;  // N_r elements, row-major (row = vertical index)
  std::vector<Point3> ue;   // K antennas
};

/// BS: uniform linear array along the BS tilt's horizontal axis, centred on
/// bs_position. RIS: N_z x N_y grid in the panel plane, pitch a horizontally
/// and b vertically, centred on ris_position; element (row, col) has index
/// row * N_y + col and row 0 is the top row. UE: linear array along x at
/// (ue_xy, ue_height). Throws OutOfBoundsError if `ue_xy` is outside the area.
ElementLayout element_positions(const ScenarioConfig& config, const Point2& ue_xy);

/// Direct-link power gain from the 3GPP 38.901 UMi street-canyon LOS model
/// (pre-breakpoint branch), PL = 32.4 + 21 log10(d) + 20 log10(f_GHz) dB.
/// `distance` is clamped to config.pathloss_min_distance. Antenna gains are
/// applied only when config.direct_link_antenna_gains is set.
double pathloss_direct(double distance, const ScenarioConfig& config);

/// Azimuth/polar angles of a direction in the RIS panel frame.
struct PanelAngles {
  double azimuth = 0.0;  // from the panel normal, towards the horizontal axis
  double polar = kPi / 2;  // from the panel's vertical axis
};

PanelAngles panel_angles(const ScenarioConfig& config, const Point3& direction);

struct RisElementGains {
  double ris_to_ue = 0.0;  // g_ru
  double bs_to_ris = 0.0;  // g_br
};

/// Unnormalized sinc, sin(x)/x with sinc(0) = 1.
double sinc(double x);

/// Flat-plate element gains for one RIS element.
///   incident_azimuth   psi_i: direction towards the BS
///   scattered_azimuth  psi_s: direction towards the UE antenna
///   scattered_polar    theta_s: direction towards the UE antenna
RisElementGains ris_element_gains(const ScenarioConfig& config, double incident_azimuth,
                                  double scattered_azimuth, double scattered_polar,
                                  double distance_ris_ue, double distance_bs_ris);

struct ChannelSet {
  CMatrix h_bu;  // K x M
  CMatrix h_br;  // N_r x M
  CMatrix h_ru;  // K x N_r
  bool obstacle_applied = false;
  bool pathloss_clamped = false;  // some BS-UE distance was below the UMi validity limit

  int ue_antennas() const { return static_cast<int>(h_bu.rows()); }
  int bs_antennas() const { return static_cast<int>(h_bu.cols()); }
  int ris_elements() const { return static_cast<int>(h_br.rows()); }
};

/// LOS channels for a UE at `ue_xy`. Throws DegenerateGeometryError if any
/// link distance is zero.
ChannelSet build_channels(const ScenarioConfig& config, const Point2& ue_xy);

/// H = H_bu + H_ru * theta * H_br.
CMatrix effective_channel(const ChannelSet& channels, const CMatrix& theta);

/// 2 D^2 / lambda with D the largest side of the RIS panel.
double fraunhofer_distance(const ScenarioConfig& config);

/// Closed-segment intersection test in the plane (touching counts).
bool segments_intersect(const Point2& p1, const Point2& p2, const Point2& q1, const Point2& q2);

/// True if the horizontal BS -> UE segment crosses the configured obstacle.
bool direct_path_obstructed(const ScenarioConfig& config, const Point2& ue_xy);

}  // namespace risopt
