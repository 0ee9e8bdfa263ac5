#pragma once

#include "risopt/geometry.hpp"
#include "risopt/manifold.hpp"
#include "risopt/types.hpp"

#include <optional>
#include <string>

namespace risopt {

enum class Objective { TxBF, Capacity };

std::string to_string(Objective objective);
std::optional<Objective> parse_objective(const std::string& text);

inline CMatrix effective_channel(const ChannelSet& channels, const ScatterMatrix& theta) {
  return effective_channel(channels, theta.entries);
}

// Gradient convention used throughout: for a real objective J(Theta) the
// gradient is the matrix G with dJ = Re<G, dTheta>, <A, B> = sum conj(A) o B.

struct WaterfillingResult {
  RVector powers;  // same order as the input eigenvalues
  double water_level = 0.0;
  int active_modes = 0;
};

/// p_i = max(0, mu - sigma^2 / lambda_i) with sum p_i = P, solved exactly over
/// the active set. All-zero eigenvalues give zero powers and mu = 0.
WaterfillingResult waterfilling(const RVector& eigenvalues, double total_power, double noise_power);

struct TxBFResult {
  double rate = 0.0;        // bit/s/Hz
  double lambda_max = 0.0;  // largest eigenvalue of H^H H
  double lambda_second = 0.0;
  CVector precoder;  // v, unit norm, M
  CVector combiner;  // u_m, unit norm, K

  /// Top singular pair is (numerically) repeated, so lambda_max is not
  /// differentiable here.
  bool top_mode_degenerate() const { return lambda_max - lambda_second < 1e-10 * lambda_max; }
};

TxBFResult txbf_evaluate(const CMatrix& h, double tx_power, double noise_power);

/// Gradient of lambda_max(H^H H) with respect to Theta at H = H_bu + H_ru Theta H_br,
/// given the dominant left singular vector `combiner` of H:
///   G = 2 H_ru^H u u^H H H_br^H.
CMatrix txbf_gradient(const ChannelSet& channels, const CMatrix& theta, const CVector& combiner);

/// d rate / d lambda_max, for chaining txbf_gradient into bit/s/Hz units.
double txbf_rate_slope(double lambda_max, double tx_power, double noise_power);

struct CapacityResult {
  double capacity = 0.0;  // bit/s/Hz
  RVector eigenvalues;    // squared singular values, descending, min(K, M)
  RVector mode_powers;    // W, aligned with eigenvalues
  CMatrix precoder;       // right singular vectors, M x min(K, M)
  double water_level = 0.0;
};

CapacityResult capacity_evaluate(const CMatrix& h, double tx_power, double noise_power);

/// log2 det(I + H R_s H^H / sigma^2).
double capacity_logdet(const CMatrix& h, const CMatrix& covariance, double noise_power);

/// Objective of the inner loop: log2 det(I + Hb Hb^H / sigma^2) with
/// Hb = H V Sigma^{1/2} for a frozen precoder and power allocation.
double capacity_fixed_precoder(const CMatrix& h, const CMatrix& precoder, const RVector& powers,
                               double noise_power);

/// Gradient of capacity_fixed_precoder with respect to Theta:
///   G = (2 log2(e) / sigma^2) H_ru^H X^{-1} Hb Hb_br^H,
///   X = I + Hb Hb^H / sigma^2,  Hb_br = H_br V Sigma^{1/2}.
/// Zero-power modes are dropped before forming Hb.
CMatrix capacity_gradient(const ChannelSet& channels, const CMatrix& theta, const CMatrix& precoder,
                          const RVector& powers, double noise_power);

}  // namespace risopt
