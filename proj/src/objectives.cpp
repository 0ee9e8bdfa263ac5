#include "risopt/objectives.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace risopt {

namespace {

constexpr double kLog2e = 1.4426950408889634;

void check_power(double tx_power, double noise_power) {
  if (!(tx_power > 0.0) || !std::isfinite(tx_power)) throw std::invalid_argument("transmit power must be positive");
  if (!(noise_power > 0.0) || !std::isfinite(noise_power)) throw std::invalid_argument("noise power must be positive");
}

void check_channel(const CMatrix& h) {
  if (h.size() == 0) throw DimensionError("channel matrix is empty");
  if (!h.allFinite()) throw NumericalError("channel matrix has non-finite entries");
}

}  // namespace

std::string to_string(Objective objective) { return objective == Objective::TxBF ? "txbf" : "capacity"; }

std::optional<Objective> parse_objective(const std::string& text) {
  if (text == "txbf" || text == "TxBF") return Objective::TxBF;
  if (text == "capacity" || text == "Capacity") return Objective::Capacity;
  return std::nullopt;
}

WaterfillingResult waterfilling(const RVector& eigenvalues, double total_power, double noise_power) {
  check_power(total_power, noise_power);
  const Eigen::Index n = eigenvalues.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(eigenvalues(i) >= 0.0) || !std::isfinite(eigenvalues(i))) {
      throw std::invalid_argument("waterfilling needs finite non-negative eigenvalues");
    }
  }

  WaterfillingResult out;
  out.powers = RVector::Zero(n);

  std::vector<Eigen::Index> order;
  for (Eigen::Index i = 0; i < n; ++i)
    if (eigenvalues(i) > 0.0) order.push_back(i);
  if (order.empty()) return out;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return eigenvalues(a) > eigenvalues(b); });

  // Largest m whose weakest mode still sits below the water level.
  std::vector<double> floor(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) floor[i] = noise_power / eigenvalues(order[i]);
  double floor_sum = std::accumulate(floor.begin(), floor.end(), 0.0);
  std::size_t m = order.size();
  double mu = 0.0;
  for (; m >= 1; --m) {
    mu = (total_power + floor_sum) / static_cast<double>(m);
    if (mu > floor[m - 1]) break;
    floor_sum -= floor[m - 1];
  }

  out.water_level = mu;
  out.active_modes = static_cast<int>(m);
  for (std::size_t i = 0; i < m; ++i) out.powers(order[i]) = mu - floor[i];
  return out;
}

TxBFResult txbf_evaluate(const CMatrix& h, double tx_power, double noise_power) {
  check_power(tx_power, noise_power);
  check_channel(h);
  Eigen::JacobiSVD<CMatrix> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& sv = svd.singularValues();
  TxBFResult r;
  r.lambda_max = sv(0) * sv(0);
  r.lambda_second = sv.size() > 1 ? sv(1) * sv(1) : 0.0;
  r.precoder = svd.matrixV().col(0);
  r.combiner = svd.matrixU().col(0);
  r.rate = std::log2(1.0 + tx_power * r.lambda_max / noise_power);
  return r;
}

CMatrix txbf_gradient(const ChannelSet& channels, const CMatrix& theta, const CVector& combiner) {
  const CMatrix h = effective_channel(channels, theta);
  if (combiner.size() != h.rows()) throw DimensionError("combiner length does not match the UE antenna count");
  const CVector hu = channels.h_ru.adjoint() * combiner;       // N_r
  const CVector hv = channels.h_br * (h.adjoint() * combiner);  // N_r, = H_br H^H u
  return 2.0 * hu * hv.adjoint();
}

double txbf_rate_slope(double lambda_max, double tx_power, double noise_power) {
  const double snr = tx_power / noise_power;
  return kLog2e * snr / (1.0 + snr * lambda_max);
}

CapacityResult capacity_evaluate(const CMatrix& h, double tx_power, double noise_power) {
  check_power(tx_power, noise_power);
  check_channel(h);
  Eigen::JacobiSVD<CMatrix> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector sv = svd.singularValues();
  CapacityResult r;
  r.eigenvalues = sv.cwiseAbs2();
  r.precoder = svd.matrixV();
  const WaterfillingResult wf = waterfilling(r.eigenvalues, tx_power, noise_power);
  r.mode_powers = wf.powers;
  r.water_level = wf.water_level;
  r.capacity = 0.0;
  for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i) {
    r.capacity += std::log2(1.0 + r.mode_powers(i) * r.eigenvalues(i) / noise_power);
  }
  return r;
}

double capacity_logdet(const CMatrix& h, const CMatrix& covariance, double noise_power) {
  const Eigen::Index k = h.rows();
  const CMatrix x = CMatrix::Identity(k, k) + h * covariance * h.adjoint() / noise_power;
  Eigen::LLT<CMatrix> llt(x);
  if (llt.info() != Eigen::Success) throw NumericalError("log-det argument is not positive definite");
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) logdet += 2.0 * std::log(std::real(llt.matrixL()(i, i)));
  return logdet * kLog2e;
}

namespace {

/// Columns V_i sqrt(p_i) for the modes carrying power.
CMatrix weighted_precoder(const CMatrix& precoder, const RVector& powers) {
  if (precoder.cols() != powers.size()) throw DimensionError("precoder and power vector disagree on mode count");
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < powers.size(); ++i) {
    if (powers(i) < 0.0) throw std::invalid_argument("mode powers must be non-negative");
    if (powers(i) > 0.0) active.push_back(i);
  }
  CMatrix f(precoder.rows(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t c = 0; c < active.size(); ++c) f.col(c) = precoder.col(active[c]) * std::sqrt(powers(active[c]));
  return f;
}

}  // namespace

double capacity_fixed_precoder(const CMatrix& h, const CMatrix& precoder, const RVector& powers,
                               double noise_power) {
  const CMatrix f = weighted_precoder(precoder, powers);
  if (f.cols() == 0) return 0.0;
  return capacity_logdet(h * f, CMatrix::Identity(f.cols(), f.cols()), noise_power);
}

CMatrix capacity_gradient(const ChannelSet& channels, const CMatrix& theta, const CMatrix& precoder,
                          const RVector& powers, double noise_power) {
  const int n = channels.ris_elements();
  const CMatrix f = weighted_precoder(precoder, powers);
  if (f.cols() == 0) return CMatrix::Zero(n, n);
  if (f.rows() != channels.bs_antennas()) throw DimensionError("precoder rows do not match the BS antenna count");

  const CMatrix h_bar = effective_channel(channels, theta) * f;  // K x m
  const CMatrix h_bar_br = channels.h_br * f;                    // N_r x m
  const Eigen::Index k = h_bar.rows();
  const CMatrix x = CMatrix::Identity(k, k) + h_bar * h_bar.adjoint() / noise_power;
  const CMatrix x_inv_h_bar = x.llt().solve(h_bar);  // K x m
  const CMatrix left = channels.h_ru.adjoint() * x_inv_h_bar;  // N_r x m
  return (2.0 * kLog2e / noise_power) * left * h_bar_br.adjoint();
}

}  // namespace risopt
