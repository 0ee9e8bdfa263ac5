#include "risopt/geometry.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace risopt;

namespace {

double extent_along(const std::vector<Point3>& pts, const Point3& axis) {
  double lo = 1e300, hi = -1e300;
  for (const auto& p : pts) {
    lo = std::min(lo, p.dot(axis));
    hi = std::max(hi, p.dot(axis));
  }
  return hi - lo;
}

double wrap(double a) { return std::remainder(a, 2.0 * kPi); }

}  // namespace

TEST(ElementPositions, RisGridSpan) {
  const ScenarioConfig c = table1_scenario(10);  // 5 rows x 2 columns, a = b = 0.005 m
  const ElementLayout l = element_positions(c, {30.0, 30.0});
  ASSERT_EQ(l.ris.size(), 10u);
  // Coordinates near 40 m carry about 1e-14 of rounding.
  EXPECT_NEAR(extent_along(l.ris, c.ris_tilt.horizontal_axis()), 0.005, 1e-13);
  EXPECT_NEAR(extent_along(l.ris, c.ris_tilt.vertical_axis()), 0.020, 1e-13);
  EXPECT_NEAR(extent_along(l.ris, c.ris_tilt.boresight()), 0.0, 1e-13);
  Point3 centroid = Point3::Zero();
  for (const auto& p : l.ris) centroid += p / 10.0;
  EXPECT_NEAR((centroid - c.ris_position).norm(), 0.0, 1e-14);
  // Row-major with row 0 at the top.
  EXPECT_GT(l.ris[0].z(), l.ris[2].z());
  EXPECT_DOUBLE_EQ(l.ris[0].z(), l.ris[1].z());
}

TEST(ElementPositions, ArraysAndSingleAntenna) {
  ScenarioConfig c = table1_scenario(10);
  ElementLayout l = element_positions(c, {12.0, 7.0});
  ASSERT_EQ(l.bs.size(), 4u);
  ASSERT_EQ(l.ue.size(), 2u);
  for (std::size_t i = 1; i < l.bs.size(); ++i) EXPECT_NEAR((l.bs[i] - l.bs[i - 1]).norm(), 0.005, 1e-13);
  EXPECT_NEAR((l.ue[1] - l.ue[0]).norm(), 0.005, 1e-13);
  EXPECT_NEAR(std::abs((l.ue[1] - l.ue[0]).x()), 0.005, 1e-13);  // UE array along x
  EXPECT_DOUBLE_EQ(l.ue[0].z(), 1.5);
  // BS array is horizontal and perpendicular to the boresight.
  EXPECT_NEAR((l.bs[1] - l.bs[0]).z(), 0.0, 1e-15);
  EXPECT_NEAR((l.bs[1] - l.bs[0]).dot(c.bs_tilt.boresight()), 0.0, 1e-15);

  c.bs_antennas = 1;
  l = element_positions(c, {12.0, 7.0});
  ASSERT_EQ(l.bs.size(), 1u);
  EXPECT_EQ(l.bs[0], c.bs_position);
}

TEST(ElementPositions, OutsideAreaThrows) {
  const ScenarioConfig c = table1_scenario(10);
  EXPECT_THROW(element_positions(c, {-0.1, 5.0}), OutOfBoundsError);
  EXPECT_THROW(element_positions(c, {5.0, 60.5}), OutOfBoundsError);
  EXPECT_THROW(build_channels(c, {61.0, 5.0}), OutOfBoundsError);
  EXPECT_NO_THROW(element_positions(c, {60.0, 0.0}));
}

TEST(Pathloss, HandEvaluatedAtTenMetres) {
  const ScenarioConfig c = table1_scenario();
  // 32.4 + 21 log10(10) + 20 log10(30) = 82.94242509439325 dB
  EXPECT_NEAR(pathloss_direct(10.0, c), std::pow(10.0, -82.94242509439325 / 10.0), 1e-22);
}

TEST(Pathloss, MonotoneAndClamped) {
  const ScenarioConfig c = table1_scenario();
  double prev = pathloss_direct(10.0, c);
  for (double d = 10.5; d <= 100.0; d += 0.5) {
    const double b = pathloss_direct(d, c);
    EXPECT_LE(b, prev);
    prev = b;
  }
  EXPECT_EQ(pathloss_direct(3.0, c), pathloss_direct(10.0, c));
}

TEST(Pathloss, AntennaGainsWhenEnabled) {
  ScenarioConfig c = table1_scenario();
  EXPECT_EQ(pathloss_direct(20.0, c), pathloss_direct(20.0, [&] {
              ScenarioConfig d = c;
              d.bs_gain *= 2.0;
              return d;
            }()));
  c.direct_link_antenna_gains = true;
  c.bs_gain = 1.0;
  c.ue_gain = 1.0;
  const double base = pathloss_direct(20.0, c);
  c.bs_gain = 2.0;
  EXPECT_NEAR(pathloss_direct(20.0, c), 2.0 * base, 1e-15 * base);
}

TEST(RisGains, ClosedFormCases) {
  const ScenarioConfig c = table1_scenario();
  const double ab = c.ris_element_width * c.ris_element_height;
  // Grazing incidence; cos(pi/2) is only zero to 6e-17 in floating point.
  EXPECT_NEAR(ris_element_gains(c, kPi / 2, 0.0, kPi / 2, 5.0, 5.0).bs_to_ris, 0.0, 1e-30);
  // Broadside: W = Y = 0.
  const RisElementGains g = ris_element_gains(c, 0.0, 0.0, kPi / 2, 5.0, 7.0);
  EXPECT_NEAR(g.ris_to_ue, c.ue_gain / (4 * kPi) * ab / 25.0, 1e-24);
  EXPECT_NEAR(g.bs_to_ris, c.bs_gain / (4 * kPi) * ab / 49.0, 1e-24);
  // Inverse-square law.
  const double far = ris_element_gains(c, 0.3, -0.4, 1.2, 8.0, 3.0).ris_to_ue;
  const double close = ris_element_gains(c, 0.3, -0.4, 1.2, 4.0, 3.0).ris_to_ue;
  EXPECT_NEAR(close, 4.0 * far, 1e-12 * close);
}

TEST(RisGains, SincPattern) {
  EXPECT_EQ(sinc(0.0), 1.0);
  EXPECT_NEAR(sinc(kPi), 0.0, 1e-16);
  EXPECT_NEAR(sinc(1e-9), 1.0, 1e-15);
  EXPECT_NEAR(sinc(0.5), std::sin(0.5) / 0.5, 1e-16);
  ScenarioConfig c = table1_scenario();
  const double a = c.ris_element_width;
  const double lambda = c.wavelength();
  const double psi_i = 0.2, psi_s = -0.5, theta_s = 1.1;
  const double w = kPi * a / lambda * std::cos(theta_s);
  const double y = kPi * a / lambda * (std::sin(psi_i) + std::sin(theta_s) * std::sin(psi_s));
  const double expected = c.ue_gain / (4 * kPi) * a * a / 4.0 * std::pow(sinc(y) * sinc(w), 2);
  EXPECT_NEAR(ris_element_gains(c, psi_i, psi_s, theta_s, 2.0, 1.0).ris_to_ue, expected, 1e-15 * expected);
}

TEST(Channels, ShapesAndFlags) {
  const ScenarioConfig c = table1_scenario(20);
  const ChannelSet ch = build_channels(c, {30.0, 20.0});
  EXPECT_EQ(ch.h_bu.rows(), 2);
  EXPECT_EQ(ch.h_bu.cols(), 4);
  EXPECT_EQ(ch.h_br.rows(), 20);
  EXPECT_EQ(ch.h_br.cols(), 4);
  EXPECT_EQ(ch.h_ru.rows(), 2);
  EXPECT_EQ(ch.h_ru.cols(), 20);
  EXPECT_FALSE(ch.obstacle_applied);
  EXPECT_FALSE(ch.pathloss_clamped);
  EXPECT_TRUE(build_channels(c, {30.5, 59.5}).pathloss_clamped);
}

TEST(Channels, MagnitudesAndPhasesMatchTheGainModels) {
  const ScenarioConfig c = table1_scenario(10);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1.0, 59.0);
  const double k = 2 * kPi / c.wavelength();
  for (int trial = 0; trial < 5; ++trial) {
    const Point2 ue{u(rng), u(rng)};
    const ChannelSet ch = build_channels(c, ue);
    const ElementLayout l = element_positions(c, ue);
    for (int kk = 0; kk < 2; ++kk) {
      for (int m = 0; m < 4; ++m) {
        const double d = (l.ue[kk] - l.bs[m]).norm();
        EXPECT_NEAR(std::abs(ch.h_bu(kk, m)), std::sqrt(pathloss_direct(d, c)), 1e-12 * std::abs(ch.h_bu(kk, m)));
        EXPECT_NEAR(wrap(std::arg(ch.h_bu(kk, m)) + k * d), 0.0, 1e-7);
      }
    }
    for (int i = 0; i < 10; ++i) {
      const double psi_bs = panel_angles(c, c.bs_position - l.ris[i]).azimuth;
      for (int m = 0; m < 4; ++m) {
        const double d = (l.bs[m] - l.ris[i]).norm();
        const double psi = panel_angles(c, l.bs[m] - l.ris[i]).azimuth;
        const double g = c.bs_gain / (4 * kPi) * 2.5e-5 / (d * d) * std::pow(std::cos(psi), 2);
        EXPECT_NEAR(std::abs(ch.h_br(i, m)), std::sqrt(g), 1e-12 * std::sqrt(g));
        EXPECT_NEAR(wrap(std::arg(ch.h_br(i, m)) + k * d), 0.0, 1e-7);
      }
      for (int kk = 0; kk < 2; ++kk) {
        const Point3 v = l.ue[kk] - l.ris[i];
        const PanelAngles s = panel_angles(c, v);
        const double g = ris_element_gains(c, psi_bs, s.azimuth, s.polar, v.norm(), 1.0).ris_to_ue;
        EXPECT_NEAR(std::abs(ch.h_ru(kk, i)), std::sqrt(g), 1e-12 * std::sqrt(g));
        EXPECT_NEAR(wrap(std::arg(ch.h_ru(kk, i)) + k * v.norm()), 0.0, 1e-7);
      }
    }
  }
}

TEST(Channels, PanelAnglesInTheRisFrame) {
  const ScenarioConfig c = table1_scenario();
  // Along the normal: broadside.
  PanelAngles a = panel_angles(c, Point3(5, 0, 0));
  EXPECT_NEAR(a.azimuth, 0.0, 1e-15);
  EXPECT_NEAR(a.polar, kPi / 2, 1e-15);
  // Straight up: along the panel's vertical axis.
  a = panel_angles(c, Point3(0, 0, 2));
  EXPECT_NEAR(a.polar, 0.0, 1e-15);
  // 45 degrees towards the horizontal axis (-y for this panel).
  a = panel_angles(c, Point3(1, -1, 0));
  EXPECT_NEAR(a.azimuth, kPi / 4, 1e-15);
}

TEST(Channels, FullWavelengthPhaseWraps) {
  ScenarioConfig c = table1_scenario(10);
  c.bs_antennas = 1;
  c.ue_antennas = 1;
  c.bs_position = {30.0, 60.0, 1.51};  // exactly one wavelength above the UE
  const ChannelSet ch = build_channels(c, {30.0, 60.0});
  EXPECT_NEAR(std::arg(ch.h_bu(0, 0)), 0.0, 1e-9);
  EXPECT_GT(ch.h_bu(0, 0).real(), 0.0);
}

TEST(Channels, CoincidentElementIsDegenerate) {
  ScenarioConfig c = table1_scenario(10);
  c.ris_rows = 1;
  c = with_ris_elements(c, 1);
  c.ue_antennas = 1;
  c.ris_position = {10.0, 40.0, 1.5};
  EXPECT_THROW(build_channels(c, {10.0, 40.0}), DegenerateGeometryError);
}

TEST(Channels, ObstacleScalesOnlyTheDirectLink) {
  ScenarioConfig c = table1_scenario(10);
  const Point2 ue{28.0, 30.0};
  const ChannelSet clear = build_channels(c, ue);
  c.obstacle = Obstacle{{23.0, 40.0}, {33.0, 40.0}, db_to_linear(-10.0)};
  const ChannelSet blocked = build_channels(c, ue);
  EXPECT_TRUE(blocked.obstacle_applied);
  const double amp = std::pow(10.0, -10.0 / 20.0);
  EXPECT_NEAR((blocked.h_bu - amp * clear.h_bu).norm(), 0.0, 1e-15 * clear.h_bu.norm());
  EXPECT_TRUE(blocked.h_br == clear.h_br);
  EXPECT_TRUE(blocked.h_ru == clear.h_ru);
  // Unobstructed point is untouched.
  const ChannelSet side = build_channels(c, {5.0, 5.0});
  EXPECT_FALSE(side.obstacle_applied);
}

TEST(EffectiveChannel, ReferenceCases) {
  std::mt19937_64 rng(3);
  ChannelSet ch;
  ch.h_bu = test::random_complex(2, 4, rng);
  ch.h_br = test::random_complex(3, 4, rng);
  ch.h_ru = test::random_complex(2, 3, rng);
  EXPECT_TRUE(effective_channel(ch, CMatrix::Zero(3, 3)) == ch.h_bu);
  EXPECT_NEAR((effective_channel(ch, CMatrix::Identity(3, 3)) - (ch.h_bu + ch.h_ru * ch.h_br)).norm(), 0.0, 1e-14);

  const CMatrix theta = test::random_complex(3, 3, rng);
  const CMatrix h = effective_channel(ch, theta);
  for (int k = 0; k < 2; ++k) {
    for (int m = 0; m < 4; ++m) {
      Complex acc = ch.h_bu(k, m);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) acc += ch.h_ru(k, i) * theta(i, j) * ch.h_br(j, m);
      EXPECT_NEAR(std::abs(h(k, m) - acc), 0.0, 1e-13);
    }
  }
  const CMatrix t2 = test::random_complex(3, 3, rng);
  EXPECT_NEAR(((effective_channel(ch, theta + t2) - ch.h_bu) -
               (effective_channel(ch, theta) - ch.h_bu + effective_channel(ch, t2) - ch.h_bu))
                  .norm(),
              0.0, 1e-13);
  EXPECT_THROW(effective_channel(ch, CMatrix::Identity(2, 2)), DimensionError);
}

TEST(EffectiveChannel, Scalar) {
  ChannelSet ch;
  ch.h_bu = CMatrix::Constant(1, 1, Complex(0.5, -0.1));
  ch.h_br = CMatrix::Constant(1, 1, Complex(0.2, 0.3));
  ch.h_ru = CMatrix::Constant(1, 1, Complex(-1.0, 0.4));
  const Complex theta(0.6, 0.8);
  const Complex expected = Complex(0.5, -0.1) + Complex(-1.0, 0.4) * theta * Complex(0.2, 0.3);
  EXPECT_NEAR(std::abs(effective_channel(ch, CMatrix::Constant(1, 1, theta))(0, 0) - expected), 0.0, 1e-16);
}

TEST(Fraunhofer, Examples) {
  const ScenarioConfig big = table1_scenario(2000);
  EXPECT_NEAR(fraunhofer_distance(big), 800.0, 1e-9);
  ScenarioConfig one = table1_scenario(10);
  one.ris_rows = 1;
  one = with_ris_elements(one, 1);
  EXPECT_NEAR(fraunhofer_distance(one), 0.005, 1e-15);
  ScenarioConfig twice = one;
  twice.ris_element_width *= 2;
  twice.ris_element_height *= 2;
  EXPECT_NEAR(fraunhofer_distance(twice), 4.0 * fraunhofer_distance(one), 1e-15);
}

TEST(Segments, IntersectionCases) {
  EXPECT_TRUE(segments_intersect({0, 0}, {2, 2}, {0, 2}, {2, 0}));
  EXPECT_FALSE(segments_intersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
  EXPECT_TRUE(segments_intersect({0, 0}, {1, 1}, {1, 1}, {2, 0}));    // shared endpoint
  EXPECT_TRUE(segments_intersect({0, 0}, {2, 0}, {1, 0}, {1, 3}));    // T junction
  EXPECT_TRUE(segments_intersect({0, 0}, {2, 0}, {1, 0}, {3, 0}));    // collinear overlap
  EXPECT_FALSE(segments_intersect({0, 0}, {1, 0}, {2, 0}, {3, 0}));   // collinear, disjoint
  EXPECT_FALSE(segments_intersect({0, 0}, {1, 1}, {2, 2.1}, {3, 0}));
}

TEST(Segments, BehindTheObstacle) {
  ScenarioConfig c = table1_scenario();
  EXPECT_FALSE(direct_path_obstructed(c, {28.0, 30.0}));  // no obstacle configured
  c.obstacle = Obstacle{{23.0, 40.0}, {33.0, 40.0}, 0.1};
  EXPECT_TRUE(direct_path_obstructed(c, {28.0, 30.0}));
  EXPECT_TRUE(direct_path_obstructed(c, {30.0, 0.5}));
  EXPECT_FALSE(direct_path_obstructed(c, {5.0, 5.0}));
  EXPECT_FALSE(direct_path_obstructed(c, {28.0, 45.0}));  // in front of the wall
}
