#pragma once

#include "risopt/geometry.hpp"
#include "risopt/objectives.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace risopt {

/// Gradient implementations under test. Defaults are the library ones;
/// replacing one lets a mutation test confirm that the suite catches it.
struct ValidationHooks {
  std::function<CMatrix(const ChannelSet&, const CMatrix&, const CVector&)> txbf_gradient =
      [](const ChannelSet& ch, const CMatrix& theta, const CVector& u) { return risopt::txbf_gradient(ch, theta, u); };
  std::function<CMatrix(const ChannelSet&, const CMatrix&, const CMatrix&, const RVector&, double)>
      capacity_gradient = [](const ChannelSet& ch, const CMatrix& theta, const CMatrix& v, const RVector& p,
                             double noise) { return risopt::capacity_gradient(ch, theta, v, p, noise); };
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;      // largest error observed
  double tolerance = 0.0;  // threshold it was held to
  std::string detail;
};

/// Oracle checks at small N_r: gradients against central finite differences
/// in every regime's parameter space, the exponential differential against
/// finite differences (distinct and repeated eigenvalues) and against a Pade
/// matrix exponential, projection invariants, and waterfilling KKT and
/// brute-force agreement.
std::vector<CheckResult> run_validation(const ValidationHooks& hooks = {}, std::uint64_t seed = 2024);

/// Random complex Gaussian channel set (unit-variance entries).
ChannelSet random_channels(int ue_antennas, int bs_antennas, int ris_elements, std::uint64_t seed);

}  // namespace risopt
