#include "risopt/manifold.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace risopt {

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::Diagonal:
      return "diag";
    case Regime::BDExponential:
      return "bd-exp";
    case Regime::BDProjection:
      return "bd-proj";
  }
  return "unknown";
}

std::optional<Regime> parse_regime(const std::string& text) {
  if (text == "diag" || text == "Diagonal" || text == "d-ris") return Regime::Diagonal;
  if (text == "bd-exp" || text == "BDExponential") return Regime::BDExponential;
  if (text == "bd-proj" || text == "BDProjection" || text == "bd-ris") return Regime::BDProjection;
  return std::nullopt;
}

double ScatterMatrix::unitarity_residual() const {
  const auto n = entries.rows();
  return (entries.adjoint() * entries - CMatrix::Identity(n, n)).norm();
}

double ScatterMatrix::symmetry_residual() const { return (entries - entries.transpose()).norm(); }

bool ScatterMatrix::satisfies_invariants() const {
  const int n = size();
  if (entries.cols() != n || n == 0) return false;
  if (!entries.allFinite()) return false;
  if (regime == Regime::Diagonal) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j && entries(i, j) != Complex(0.0, 0.0)) return false;
      }
      if (std::abs(std::abs(entries(i, i)) - 1.0) > 1e-12) return false;
    }
    return true;
  }
  const double tol = 1e-10 * n;
  return unitarity_residual() <= tol && symmetry_residual() <= tol;
}

ScatterMatrix diagonal_scatter(const RVector& phases) {
  ScatterMatrix s;
  s.regime = Regime::Diagonal;
  s.entries = CMatrix::Zero(phases.size(), phases.size());
  for (Eigen::Index i = 0; i < phases.size(); ++i) s.entries(i, i) = std::polar(1.0, phases(i));
  return s;
}

// ---------------------------------------------------------------------------
// Symmetric generator

void SymmetricGenerator::check() const {
  const Eigen::Index n = diag.size();
  if (n < 1) throw DimensionError("generator must have at least one diagonal entry");
  if (offdiag.size() != n * (n - 1) / 2) {
    throw DimensionError("generator with " + std::to_string(n) + " diagonal entries needs " +
                         std::to_string(n * (n - 1) / 2) + " off-diagonal entries, got " +
                         std::to_string(offdiag.size()));
  }
}

RMatrix materialize_generator(const SymmetricGenerator& g) {
  g.check();
  const Eigen::Index n = g.diag.size();
  RMatrix w(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i, i) = g.diag(i);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = g.offdiag(offdiag_index(i, j, n));
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return w;
}

SymmetricGenerator extract_generator(const RMatrix& w) {
  if (w.rows() != w.cols()) throw DimensionError("generator source must be square");
  const Eigen::Index n = w.rows();
  SymmetricGenerator g;
  g.diag = w.diagonal();
  g.offdiag.resize(n * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) g.offdiag(offdiag_index(i, j, n)) = w(i, j);
  return g;
}

// ---------------------------------------------------------------------------
// Matrix exponential parameterization

namespace {

struct SymmetricEigen {
  RMatrix vectors;
  RVector values;
};

SymmetricEigen symmetric_eigen(const SymmetricGenerator& g) {
  const RMatrix w = materialize_generator(g);
  if (!w.allFinite()) throw NumericalError("generator contains non-finite entries");
  Eigen::SelfAdjointEigenSolver<RMatrix> es(w);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition failed");
  return {es.eigenvectors(), es.eigenvalues()};
}

CMatrix exp_from_eigen(const SymmetricEigen& e) {
  const Eigen::Index n = e.values.size();
  CVector phase(n);
  for (Eigen::Index k = 0; k < n; ++k) phase(k) = std::polar(1.0, e.values(k));
  const CMatrix u = e.vectors.cast<Complex>();
  return (u * phase.asDiagonal()) * u.transpose();
}

}  // namespace

ScatterMatrix exp_parameterize(const SymmetricGenerator& g) {
  ScatterMatrix s;
  s.regime = Regime::BDExponential;
  s.entries = exp_from_eigen(symmetric_eigen(g));
  return s;
}

ExpDifferential::ExpDifferential(const SymmetricGenerator& g) {
  const SymmetricEigen e = symmetric_eigen(g);
  eigenvectors_ = e.vectors;
  eigenvalues_ = e.values;
  theta_.regime = Regime::BDExponential;
  theta_.entries = exp_from_eigen(e);

  const Eigen::Index n = eigenvalues_.size();
  divided_.resize(n, n);
  const Complex j(0.0, 1.0);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = 0; l < n; ++l) {
      const double lk = eigenvalues_(k);
      const double ll = eigenvalues_(l);
      const double gap = lk - ll;
      if (std::abs(gap) < kDegenerateGap) {
        divided_(k, l) = j * std::polar(1.0, lk);
      } else {
        // (e^{j lk} - e^{j ll}) / (lk - ll), written without cancellation.
        divided_(k, l) = j * std::polar(1.0, 0.5 * (lk + ll)) * (std::sin(0.5 * gap) / (0.5 * gap));
      }
    }
  }
}

CMatrix ExpDifferential::apply(const RMatrix& d_w) const {
  const Eigen::Index n = eigenvalues_.size();
  if (d_w.rows() != n || d_w.cols() != n) throw DimensionError("dW has the wrong shape");
  const RMatrix rotated = eigenvectors_.transpose() * d_w * eigenvectors_;
  const CMatrix inner = divided_.cwiseProduct(rotated.cast<Complex>());
  const CMatrix u = eigenvectors_.cast<Complex>();
  return u * inner * u.transpose();
}

CMatrix ExpDifferential::apply(const SymmetricGenerator& d_g) const {
  if (d_g.size() != eigenvalues_.size()) throw DimensionError("generator differential has the wrong size");
  return apply(materialize_generator(d_g));
}

SymmetricGenerator ExpDifferential::pullback(const CMatrix& grad_theta) const {
  const Eigen::Index n = eigenvalues_.size();
  if (grad_theta.rows() != n || grad_theta.cols() != n) throw DimensionError("gradient has the wrong shape");
  // Adjoint of dW -> U (F o (U^T dW U)) U^T under Re<.,.>, restricted to real dW.
  const CMatrix u = eigenvectors_.cast<Complex>();
  const CMatrix rotated = u.transpose() * grad_theta * u;
  const CMatrix inner = divided_.conjugate().cwiseProduct(rotated);
  const RMatrix gamma = (u * inner * u.transpose()).real();

  SymmetricGenerator out;
  out.diag = gamma.diagonal();
  out.offdiag.resize(n * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) out.offdiag(offdiag_index(i, j, n)) = gamma(i, j) + gamma(j, i);
  return out;
}

// ---------------------------------------------------------------------------
// Projection

namespace {

CMatrix polar_factor(const CMatrix& a) {
  if (a.rows() <= 16) {
    Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
  }
  Eigen::BDCSVD<CMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw NumericalError("singular value decomposition failed");
  return svd.matrixU() * svd.matrixV().adjoint();
}

}  // namespace

ScatterMatrix project_unitary_symmetric(const CMatrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw DimensionError("projection needs a non-empty square matrix");
  if (!a.allFinite()) throw NumericalError("cannot project a matrix with non-finite entries");

  ScatterMatrix s;
  s.regime = Regime::BDProjection;
  CMatrix current = a;
  const double tol = 1e-10 * static_cast<double>(a.rows());
  for (int attempt = 0; attempt < 4; ++attempt) {
    const CMatrix sym = 0.5 * (current + current.transpose());
    s.entries = polar_factor(sym);
    if (!s.entries.allFinite()) throw NumericalError("projection produced non-finite entries");
    if (s.symmetry_residual() <= tol) return s;
    current = s.entries;
  }
  throw NumericalError("projection did not produce a symmetric unitary matrix");
}

// ---------------------------------------------------------------------------
// Diagonal phases

DiagPhaseDifferential::DiagPhaseDifferential(RVector phases) : phases_(std::move(phases)) {}

CMatrix DiagPhaseDifferential::apply(const RVector& d_phases) const {
  const Eigen::Index n = phases_.size();
  if (d_phases.size() != n) throw DimensionError("phase differential has the wrong size");
  CMatrix out = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) out(i, i) = Complex(0.0, 1.0) * std::polar(1.0, phases_(i)) * d_phases(i);
  return out;
}

RVector DiagPhaseDifferential::pullback(const CMatrix& grad_theta) const {
  const Eigen::Index n = phases_.size();
  if (grad_theta.rows() != n || grad_theta.cols() != n) throw DimensionError("gradient has the wrong shape");
  RVector out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i) = std::real(std::conj(grad_theta(i, i)) * Complex(0.0, 1.0) * std::polar(1.0, phases_(i)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Initialization

FeasibleStart random_feasible_init(Regime regime, int n, std::uint64_t seed) {
  if (n < 1) throw DimensionError("RIS must have at least one element");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-kPi, kPi);
  FeasibleStart start;
  switch (regime) {
    case Regime::Diagonal: {
      start.phases.resize(n);
      for (int i = 0; i < n; ++i) start.phases(i) = uniform(rng);
      start.theta = diagonal_scatter(start.phases);
      break;
    }
    case Regime::BDExponential: {
      start.generator.diag.resize(n);
      start.generator.offdiag.resize(static_cast<Eigen::Index>(n) * (n - 1) / 2);
      for (int i = 0; i < n; ++i) start.generator.diag(i) = uniform(rng);
      for (Eigen::Index i = 0; i < start.generator.offdiag.size(); ++i) start.generator.offdiag(i) = uniform(rng);
      start.theta = exp_parameterize(start.generator);
      break;
    }
    case Regime::BDProjection: {
      std::normal_distribution<double> normal(0.0, 1.0);
      CMatrix a(n, n);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) a(i, j) = Complex(normal(rng), normal(rng));
      start.theta = project_unitary_symmetric(a);
      break;
    }
  }
  return start;
}

// ---------------------------------------------------------------------------
// Serialization

void write_scatter_matrix(std::ostream& out, const ScatterMatrix& theta) {
  const int n = theta.size();
  out << "RISTHETA 1 " << n << ' ' << to_string(theta.regime) << '\n';
  std::ostringstream line;
  line << std::setprecision(17);
  for (int i = 0; i < n; ++i) {
    line.str("");
    for (int j = 0; j < n; ++j) {
      if (j) line << ' ';
      line << theta.entries(i, j).real() << ' ' << theta.entries(i, j).imag();
    }
    out << line.str() << '\n';
  }
}

ScatterMatrix read_scatter_matrix(std::istream& in) {
  std::string magic, regime_text;
  int version = 0;
  int n = 0;
  if (!(in >> magic >> version >> n >> regime_text) || magic != "RISTHETA") {
    throw ConfigError("not a scatter matrix snapshot");
  }
  if (version != 1) throw ConfigError("unsupported scatter matrix snapshot version " + std::to_string(version));
  const auto regime = parse_regime(regime_text);
  if (!regime) throw ConfigError("unknown regime '" + regime_text + "' in scatter matrix snapshot");
  if (n < 1) throw ConfigError("scatter matrix snapshot has invalid size");
  ScatterMatrix s;
  s.regime = *regime;
  s.entries.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double re = 0.0, im = 0.0;
      if (!(in >> re >> im)) {
        throw ConfigError("scatter matrix snapshot truncated at row " + std::to_string(i) + ", column " +
                          std::to_string(j));
      }
      s.entries(i, j) = Complex(re, im);
    }
  }
  return s;
}

}  // namespace risopt
