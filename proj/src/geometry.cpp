#include "risopt/geometry.hpp"

#include <cmath>
#include <sstream>

namespace risopt {

namespace {

std::vector<Point3> linear_array(const Point3& centre, const Point3& axis, int count, double spacing) {
  std::vector<Point3> pts;
  pts.reserve(count);
  const double offset = 0.5 * (count - 1);
  for (int n = 0; n < count; ++n) pts.push_back(centre + (n - offset) * spacing * axis);
  return pts;
}

double checked_distance(const Point3& a, const Point3& b, const char* link) {
  const double d = (a - b).norm();
  if (!(d > 0.0)) {
    std::ostringstream msg;
    msg << "zero-length " << link << " link at (" << a.transpose() << ")";
    throw DegenerateGeometryError(msg.str());
  }
  return d;
}

Complex los_coefficient(double gain, double distance, double wavenumber) {
  return std::sqrt(gain) * std::polar(1.0, -wavenumber * distance);
}

double cross2(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

ElementLayout element_positions(const ScenarioConfig& config, const Point2& ue_xy) {
  if (!config.area.contains(ue_xy)) {
    std::ostringstream msg;
    msg << "UE position (" << ue_xy.x() << ", " << ue_xy.y() << ") is outside the area ["
        << config.area.x_min << ", " << config.area.x_max << "] x [" << config.area.y_min << ", "
        << config.area.y_max << "]";
    throw OutOfBoundsError(msg.str());
  }

  ElementLayout layout;
  layout.bs = linear_array(config.bs_position, config.bs_tilt.horizontal_axis(), config.bs_antennas,
                           config.antenna_spacing);
  layout.ue = linear_array({ue_xy.x(), ue_xy.y(), config.ue_height}, Point3::UnitX(), config.ue_antennas,
                           config.antenna_spacing);

  const Point3 h = config.ris_tilt.horizontal_axis();
  const Point3 v = config.ris_tilt.vertical_axis();
  const double col_offset = 0.5 * (config.ris_cols - 1);
  const double row_offset = 0.5 * (config.ris_rows - 1);
  layout.ris.reserve(config.ris_elements());
  for (int row = 0; row < config.ris_rows; ++row) {
    for (int col = 0; col < config.ris_cols; ++col) {
      layout.ris.push_back(config.ris_position + (col - col_offset) * config.ris_element_width * h +
                           (row_offset - row) * config.ris_element_height * v);
    }
  }
  return layout;
}

double pathloss_direct(double distance, const ScenarioConfig& config) {
  const double d = std::max(distance, config.pathloss_min_distance);
  const double pl_db = 32.4 + 21.0 * std::log10(d) + 20.0 * std::log10(config.carrier_frequency / 1e9);
  double gain = std::pow(10.0, -pl_db / 10.0);
  if (config.direct_link_antenna_gains) gain *= config.bs_gain * config.ue_gain;
  return gain;
}

PanelAngles panel_angles(const ScenarioConfig& config, const Point3& direction) {
  const Point3 n = config.ris_tilt.boresight();
  const Point3 h = config.ris_tilt.horizontal_axis();
  const Point3 v = config.ris_tilt.vertical_axis();
  const double along_n = direction.dot(n);
  const double along_h = direction.dot(h);
  const double along_v = direction.dot(v);
  PanelAngles a;
  a.azimuth = std::atan2(along_h, along_n);
  a.polar = std::atan2(std::hypot(along_n, along_h), along_v);
  return a;
}

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

RisElementGains ris_element_gains(const ScenarioConfig& config, double incident_azimuth,
                                  double scattered_azimuth, double scattered_polar,
                                  double distance_ris_ue, double distance_bs_ris) {
  const double a = config.ris_element_width;
  const double b = config.ris_element_height;
  const double k = kPi * a / config.wavelength();
  const double w = k * std::cos(scattered_polar);
  const double y = k * (std::sin(incident_azimuth) + std::sin(scattered_polar) * std::sin(scattered_azimuth));
  const double cos_i = std::cos(incident_azimuth);
  const double sy = sinc(y);
  const double sw = sinc(w);

  RisElementGains g;
  g.ris_to_ue = config.ue_gain / (4 * kPi) * a * b / (distance_ris_ue * distance_ris_ue) * sy * sy * sw * sw;
  g.bs_to_ris = config.bs_gain / (4 * kPi) * a * b / (distance_bs_ris * distance_bs_ris) * cos_i * cos_i;
  return g;
}

ChannelSet build_channels(const ScenarioConfig& config, const Point2& ue_xy) {
  const ElementLayout layout = element_positions(config, ue_xy);
  const int m_bs = config.bs_antennas;
  const int k_ue = config.ue_antennas;
  const int n_ris = config.ris_elements();
  const double wavenumber = 2.0 * kPi * config.carrier_frequency / kSpeedOfLight;

  ChannelSet ch;
  ch.h_bu.resize(k_ue, m_bs);
  ch.h_br.resize(n_ris, m_bs);
  ch.h_ru.resize(k_ue, n_ris);

  for (int k = 0; k < k_ue; ++k) {
    for (int l = 0; l < m_bs; ++l) {
      const double d = checked_distance(layout.ue[k], layout.bs[l], "BS-UE");
      if (d < config.pathloss_min_distance) ch.pathloss_clamped = true;
      ch.h_bu(k, l) = los_coefficient(pathloss_direct(d, config), d, wavenumber);
    }
  }

  for (int i = 0; i < n_ris; ++i) {
    const Point3& element = layout.ris[i];
    const PanelAngles towards_bs = panel_angles(config, config.bs_position - element);
    for (int l = 0; l < m_bs; ++l) {
      const Point3 to_bs = layout.bs[l] - element;
      const double d = checked_distance(layout.bs[l], element, "BS-RIS");
      const double psi_i = panel_angles(config, to_bs).azimuth;
      const double g = ris_element_gains(config, psi_i, 0.0, kPi / 2, 1.0, d).bs_to_ris;
      ch.h_br(i, l) = los_coefficient(g, d, wavenumber);
    }
    for (int k = 0; k < k_ue; ++k) {
      const Point3 to_ue = layout.ue[k] - element;
      const double d = checked_distance(layout.ue[k], element, "RIS-UE");
      const PanelAngles s = panel_angles(config, to_ue);
      const double g = ris_element_gains(config, towards_bs.azimuth, s.azimuth, s.polar, d, 1.0).ris_to_ue;
      ch.h_ru(k, i) = los_coefficient(g, d, wavenumber);
    }
  }

  if (config.obstacle && direct_path_obstructed(config, ue_xy)) {
    ch.h_bu *= std::sqrt(config.obstacle->attenuation);
    ch.obstacle_applied = true;
  }
  return ch;
}

CMatrix effective_channel(const ChannelSet& channels, const CMatrix& theta) {
  const int n = channels.ris_elements();
  if (theta.rows() != n || theta.cols() != n) {
    throw DimensionError("scatter matrix is " + std::to_string(theta.rows()) + "x" + std::to_string(theta.cols()) +
                         ", expected " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (channels.h_ru.rows() != channels.h_bu.rows() || channels.h_br.cols() != channels.h_bu.cols()) {
    throw DimensionError("channel set dimensions are inconsistent");
  }
  return channels.h_bu + channels.h_ru * theta * channels.h_br;
}

double fraunhofer_distance(const ScenarioConfig& config) {
  const double width = config.ris_cols * config.ris_element_width;
  const double height = config.ris_rows * config.ris_element_height;
  const double largest = std::max(width, height);
  return 2.0 * largest * largest / config.wavelength();
}

bool segments_intersect(const Point2& p1, const Point2& p2, const Point2& q1, const Point2& q2) {
  const Point2 r = p2 - p1;
  const Point2 s = q2 - q1;
  const double d1 = cross2(r, q1 - p1);
  const double d2 = cross2(r, q2 - p1);
  const double d3 = cross2(s, p1 - q1);
  const double d4 = cross2(s, p2 - q1);
  auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };
  if (sign(d1) * sign(d2) < 0 && sign(d3) * sign(d4) < 0) return true;

  auto on_segment = [](const Point2& a, const Point2& b, const Point2& p) {
    return p.x() >= std::min(a.x(), b.x()) && p.x() <= std::max(a.x(), b.x()) && p.y() >= std::min(a.y(), b.y()) &&
           p.y() <= std::max(a.y(), b.y());
  };
  if (d1 == 0.0 && on_segment(p1, p2, q1)) return true;
  if (d2 == 0.0 && on_segment(p1, p2, q2)) return true;
  if (d3 == 0.0 && on_segment(q1, q2, p1)) return true;
  if (d4 == 0.0 && on_segment(q1, q2, p2)) return true;
  return false;
}

bool direct_path_obstructed(const ScenarioConfig& config, const Point2& ue_xy) {
  if (!config.obstacle) return false;
  return segments_intersect(config.bs_position.head<2>(), ue_xy, config.obstacle->start, config.obstacle->end);
}

}  // namespace risopt
