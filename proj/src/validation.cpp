#include "risopt/validation.hpp"

#include "risopt/manifold.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>
#include <sstream>

namespace risopt {

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kFdTolerance = 1e-6;
constexpr int kDirections = 10;

double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < 1e-14) return 0.0;
  return std::abs(analytic - numeric) / scale;
}

CMatrix gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  CMatrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = Complex(n(rng), n(rng));
  return m;
}

RMatrix random_symmetric(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  RMatrix w(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) w(i, j) = w(j, i) = u(rng);
  return w;
}

RVector random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  RVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

double inner_re(const CMatrix& a, const CMatrix& b) { return std::real((a.conjugate().cwiseProduct(b)).sum()); }

CMatrix expm_pade(const CMatrix& a) { return a.exp(); }

struct Accumulator {
  double worst = 0.0;
  int samples = 0;
  void add(double e) {
    worst = std::max(worst, e);
    ++samples;
  }
};

CheckResult finish(const std::string& name, const Accumulator& acc, double tol, const std::string& extra = "") {
  CheckResult r;
  r.name = name;
  r.worst = acc.worst;
  r.tolerance = tol;
  r.passed = acc.samples > 0 && acc.worst <= tol;
  std::ostringstream d;
  d << acc.samples << " samples, worst " << acc.worst << " (tol " << tol << ")";
  if (!extra.empty()) d << "; " << extra;
  r.detail = d.str();
  return r;
}

/// Objective and its gradient at Theta for one of the two objectives; the
/// capacity precoder is frozen at the base point.
struct ObjectiveProbe {
  const ChannelSet& channels;
  Objective objective;
  double tx_power;
  double noise_power;
  const ValidationHooks& hooks;
  CMatrix precoder;
  RVector powers;

  double value(const CMatrix& theta) const {
    const CMatrix h = effective_channel(channels, theta);
    if (objective == Objective::TxBF) return txbf_evaluate(h, tx_power, noise_power).lambda_max;
    return capacity_fixed_precoder(h, precoder, powers, noise_power);
  }

  CMatrix gradient(const CMatrix& theta) {
    const CMatrix h = effective_channel(channels, theta);
    if (objective == Objective::TxBF) {
      const TxBFResult r = txbf_evaluate(h, tx_power, noise_power);
      return hooks.txbf_gradient(channels, theta, r.combiner);
    }
    const CapacityResult c = capacity_evaluate(h, tx_power, noise_power);
    precoder = c.precoder;
    powers = c.mode_powers;
    return hooks.capacity_gradient(channels, theta, precoder, powers, noise_power);
  }
};

CheckResult check_gradient(Objective objective, Regime regime, const ValidationHooks& hooks, std::uint64_t seed) {
  Accumulator acc;
  std::mt19937_64 rng(seed);
  for (int n : {2, 4, 8}) {
    const ChannelSet ch = random_channels(2, 4, n, rng());
    ObjectiveProbe probe{ch, objective, 1.0, 0.5, hooks, {}, {}};
    for (int dir = 0; dir < kDirections; ++dir) {
      double analytic = 0.0;
      double numeric = 0.0;
      switch (regime) {
        case Regime::Diagonal: {
          const RVector phi = random_vector(n, rng, kPi);
          const RVector dphi = random_vector(n, rng);
          const DiagPhaseDifferential d(phi);
          analytic = d.pullback(probe.gradient(diagonal_scatter(phi).entries)).dot(dphi);
          numeric = (probe.value(diagonal_scatter(phi + kFdStep * dphi).entries) -
                     probe.value(diagonal_scatter(phi - kFdStep * dphi).entries)) /
                    (2 * kFdStep);
          break;
        }
        case Regime::BDExponential: {
          const SymmetricGenerator g = extract_generator(random_symmetric(n, rng, kPi));
          const SymmetricGenerator dg = extract_generator(random_symmetric(n, rng));
          const ExpDifferential d(g);
          const SymmetricGenerator grad = d.pullback(probe.gradient(d.theta().entries));
          analytic = grad.diag.dot(dg.diag) + grad.offdiag.dot(dg.offdiag);
          SymmetricGenerator plus = g, minus = g;
          plus.diag += kFdStep * dg.diag;
          plus.offdiag += kFdStep * dg.offdiag;
          minus.diag -= kFdStep * dg.diag;
          minus.offdiag -= kFdStep * dg.offdiag;
          numeric = (probe.value(exp_parameterize(plus).entries) - probe.value(exp_parameterize(minus).entries)) /
                    (2 * kFdStep);
          break;
        }
        case Regime::BDProjection: {
          // Curve Theta(t) = T exp(j t S) T^T through Theta = T T^T, T = Q exp(j Lambda / 2).
          const RMatrix w = random_symmetric(n, rng, kPi);
          Eigen::SelfAdjointEigenSolver<RMatrix> es(w);
          CMatrix t = es.eigenvectors().cast<Complex>();
          for (int k = 0; k < n; ++k) t.col(k) *= std::polar(1.0, 0.5 * es.eigenvalues()(k));
          const RMatrix s = random_symmetric(n, rng);
          const CMatrix theta = t * t.transpose();
          const Complex j(0.0, 1.0);
          const CMatrix tangent = j * t * s.cast<Complex>() * t.transpose();
          analytic = inner_re(probe.gradient(theta), tangent);
          const CMatrix up = t * expm_pade(j * kFdStep * s.cast<Complex>()) * t.transpose();
          const CMatrix down = t * expm_pade(-j * kFdStep * s.cast<Complex>()) * t.transpose();
          numeric = (probe.value(up) - probe.value(down)) / (2 * kFdStep);
          // Unconstrained complex direction: checks the full Euclidean gradient.
          const CMatrix e = gaussian(n, n, rng);
          acc.add(relative_error(inner_re(probe.gradient(theta), e),
                                 (probe.value(theta + kFdStep * e) - probe.value(theta - kFdStep * e)) /
                                     (2 * kFdStep)));
          break;
        }
      }
      acc.add(relative_error(analytic, numeric));
    }
  }
  return finish(to_string(objective) + "_gradient_" + to_string(regime), acc, kFdTolerance);
}

CheckResult check_exp_differential(std::uint64_t seed) {
  Accumulator acc;
  std::mt19937_64 rng(seed);
  const Complex j(0.0, 1.0);
  auto probe = [&](const RMatrix& w) {
    const ExpDifferential d(extract_generator(w));
    for (int dir = 0; dir < kDirections; ++dir) {
      const RMatrix dw = random_symmetric(static_cast<int>(w.rows()), rng);
      const CMatrix analytic = d.apply(dw);
      const CMatrix numeric = (expm_pade(j * (w + kFdStep * dw).cast<Complex>()) -
                               expm_pade(j * (w - kFdStep * dw).cast<Complex>())) /
                              (2 * kFdStep);
      acc.add((analytic - numeric).norm() / numeric.norm());
    }
  };
  for (int n : {2, 3, 5}) {
    probe(random_symmetric(n, rng, kPi));
    // Repeated eigenvalues.
    Eigen::HouseholderQR<RMatrix> qr(RMatrix::Random(n, n));
    const RMatrix q = qr.householderQ();
    RVector lambda = RVector::Constant(n, 0.7);
    lambda(n - 1) = -1.3;
    probe(q * lambda.asDiagonal() * q.transpose());
  }
  return finish("exp_differential_fd", acc, kFdTolerance);
}

CheckResult check_exp_against_pade(std::uint64_t seed) {
  Accumulator acc;
  std::mt19937_64 rng(seed);
  for (int n : {2, 4, 8}) {
    for (int trial = 0; trial < 5; ++trial) {
      const RMatrix w = random_symmetric(n, rng, kPi);
      const CMatrix ours = exp_parameterize(extract_generator(w)).entries;
      const CMatrix pade = expm_pade(Complex(0.0, 1.0) * w.cast<Complex>());
      acc.add((ours - pade).norm() / pade.norm());
    }
  }
  return finish("exp_parameterize_vs_pade", acc, 1e-10);
}

CheckResult check_projection(std::uint64_t seed) {
  Accumulator acc;
  std::mt19937_64 rng(seed);
  std::string failure;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 << (trial % 4);  // 2, 4, 8, 16
    const ScatterMatrix s = project_unitary_symmetric(gaussian(n, n, rng));
    const ScatterMatrix twice = project_unitary_symmetric(s.entries);
    const double scale = 1e-10 * n;
    acc.add(s.unitarity_residual() / scale);
    acc.add(s.symmetry_residual() / scale);
    acc.add((twice.entries - s.entries).norm() / 1e-12 / n);
    const ScatterMatrix e = exp_parameterize(extract_generator(random_symmetric(n, rng, kPi)));
    acc.add(e.unitarity_residual() / scale);
    acc.add(e.symmetry_residual() / scale);
  }
  return finish("manifold_invariants", acc, 1.0, "errors normalized by their tolerance");
}

CheckResult check_waterfilling_kkt(std::uint64_t seed) {
  Accumulator acc;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 8);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    RVector lambda(n);
    for (int i = 0; i < n; ++i) lambda(i) = u(rng) < 0.15 ? 0.0 : std::pow(10.0, 4.0 * u(rng) - 2.0);
    const double p = std::pow(10.0, 2.0 * u(rng) - 1.0);
    const double noise = std::pow(10.0, 2.0 * u(rng) - 2.0);
    const WaterfillingResult wf = waterfilling(lambda, p, noise);
    const bool any_positive = (lambda.array() > 0.0).any();
    acc.add(any_positive ? std::abs(wf.powers.sum() - p) : wf.powers.cwiseAbs().sum());
    for (int i = 0; i < n; ++i) {
      acc.add(std::max(0.0, -wf.powers(i)));
      if (wf.powers(i) > 0.0) {
        acc.add(std::abs(wf.water_level - noise / lambda(i) - wf.powers(i)));
      } else if (lambda(i) > 0.0) {
        acc.add(std::max(0.0, wf.water_level - noise / lambda(i)));
      }
    }
  }
  return finish("waterfilling_kkt", acc, 1e-9);
}

CheckResult check_waterfilling_grid() {
  // Brute-force water level on a 1e-6 grid for lambda = (1, 0.01), P = 1, sigma^2 = 1.
  const RVector lambda = (RVector(2) << 1.0, 0.01).finished();
  double best_mu = 0.0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (long i = 0; i <= 5'000'000; ++i) {
    const double mu = 1e-6 * static_cast<double>(i);
    double total = 0.0;
    for (int k = 0; k < 2; ++k) total += std::max(0.0, mu - 1.0 / lambda(k));
    const double gap = std::abs(total - 1.0);
    if (gap < best_gap) {
      best_gap = gap;
      best_mu = mu;
    }
  }
  const WaterfillingResult wf = waterfilling(lambda, 1.0, 1.0);
  Accumulator acc;
  acc.add(std::abs(wf.water_level - best_mu));
  for (int k = 0; k < 2; ++k) acc.add(std::abs(wf.powers(k) - std::max(0.0, best_mu - 1.0 / lambda(k))));
  return finish("waterfilling_grid_oracle", acc, 2e-6);
}

CheckResult check_capacity_dual_formula(std::uint64_t seed) {
  Accumulator acc;
  std::mt19937_64 rng(seed);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix h = gaussian(2, 4, rng);
    const double noise = 0.1 + trial * 0.05;
    const CapacityResult c = capacity_evaluate(h, 1.0, noise);
    const CMatrix cov = c.precoder * c.mode_powers.cast<Complex>().asDiagonal() * c.precoder.adjoint();
    acc.add(std::abs(c.capacity - capacity_logdet(h, cov, noise)));
  }
  return finish("capacity_dual_formula", acc, 1e-10);
}

}  // namespace

ChannelSet random_channels(int ue_antennas, int bs_antennas, int ris_elements, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ChannelSet ch;
  ch.h_bu = gaussian(ue_antennas, bs_antennas, rng);
  ch.h_br = gaussian(ris_elements, bs_antennas, rng);
  ch.h_ru = gaussian(ue_antennas, ris_elements, rng);
  return ch;
}

std::vector<CheckResult> run_validation(const ValidationHooks& hooks, std::uint64_t seed) {
  std::vector<CheckResult> out;
  std::uint64_t s = seed;
  for (Objective objective : {Objective::TxBF, Objective::Capacity}) {
    for (Regime regime : {Regime::Diagonal, Regime::BDExponential, Regime::BDProjection}) {
      out.push_back(check_gradient(objective, regime, hooks, ++s));
    }
  }
  out.push_back(check_exp_differential(++s));
  out.push_back(check_exp_against_pade(++s));
  out.push_back(check_projection(++s));
  out.push_back(check_waterfilling_kkt(++s));
  out.push_back(check_waterfilling_grid());
  out.push_back(check_capacity_dual_formula(++s));
  return out;
}

}  // namespace risopt
