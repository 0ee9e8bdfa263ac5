#pragma once

#include "risopt/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace risopt {

/// How the RIS scatter matrix is constrained and parameterized.
enum class Regime {
  Diagonal,       // conventional RIS: diag(exp(j phi))
  BDExponential,  // beyond-diagonal, Theta = exp(jW) with W real symmetric
  BDProjection,   // beyond-diagonal, free complex step then unitary-symmetric projection
};

std::string to_string(Regime regime);
/// Accepts "diag", "bd-exp", "bd-proj" (and the enum spellings).
std::optional<Regime> parse_regime(const std::string& text);

/// N_r x N_r RIS configuration tagged with the constraint regime it obeys.
struct ScatterMatrix {
  CMatrix entries;
  Regime regime = Regime::Diagonal;

  int size() const { return static_cast<int>(entries.rows()); }
  /// ||Theta^H Theta - I||_F
  double unitarity_residual() const;
  /// ||Theta - Theta^T||_F
  double symmetry_residual() const;
  /// Diagonal: zero off-diagonal, unit-modulus diagonal within 1e-12.
  /// BD: both residuals within 1e-10 * N_r.
  bool satisfies_invariants() const;
};

ScatterMatrix diagonal_scatter(const RVector& phases);

/// Real symmetric W stored as its diagonal x and strict upper triangle z.
/// z is ordered row by row: (0,1), (0,2), ..., (0,N-1), (1,2), ...
struct SymmetricGenerator {
  RVector diag;
  RVector offdiag;

  int size() const { return static_cast<int>(diag.size()); }
  /// Throws DimensionError unless offdiag has N(N-1)/2 entries.
  void check() const;
};

/// Position of W(i, j), i < j, inside SymmetricGenerator::offdiag.
inline Eigen::Index offdiag_index(Eigen::Index i, Eigen::Index j, Eigen::Index n) {
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

RMatrix materialize_generator(const SymmetricGenerator& g);
/// Inverse of materialize_generator; reads the upper triangle of `w`.
SymmetricGenerator extract_generator(const RMatrix& w);

/// Theta = U exp(j Lambda) U^T from the eigendecomposition W = U Lambda U^T.
ScatterMatrix exp_parameterize(const SymmetricGenerator& g);

/// Differential of W -> exp(jW) at a fixed generator, applied as
///   dTheta = U (F o (U^T dW U)) U^T
/// where F holds the divided differences of exp(j.) over the eigenvalues
/// (F_kl = (e^{j l_k} - e^{j l_l}) / (l_k - l_l), F_kk = j e^{j l_k}). This is
/// the Kronecker form j (U x U) S (U x U)^T without forming N^2 x N^2 objects.
class ExpDifferential {
 public:
  /// Eigenvalue pairs closer than this use the coincident-eigenvalue limit.
  static constexpr double kDegenerateGap = 1e-8;

  explicit ExpDifferential(const SymmetricGenerator& g);

  const ScatterMatrix& theta() const { return theta_; }
  const RVector& eigenvalues() const { return eigenvalues_; }
  const RMatrix& eigenvectors() const { return eigenvectors_; }
  /// F = j S in the notation above.
  const CMatrix& divided_differences() const { return divided_; }

  CMatrix apply(const RMatrix& d_w) const;
  CMatrix apply(const SymmetricGenerator& d_g) const;

  /// Gradient of J with respect to (x, z), given G with dJ = Re<G, dTheta>.
  SymmetricGenerator pullback(const CMatrix& grad_theta) const;

 private:
  RMatrix eigenvectors_;
  RVector eigenvalues_;
  CMatrix divided_;
  ScatterMatrix theta_;
};

/// Closest unitary matrix to (A + A^T) / 2 via its SVD, P Q^H. Symmetry of
/// the result is checked; if the symmetric part is rank deficient and the
/// polar factor comes out non-symmetric, it is re-symmetrized and projected
/// again. Throws NumericalError on non-finite input or persistent failure.
ScatterMatrix project_unitary_symmetric(const CMatrix& a);

/// Differential of phi -> diag(exp(j phi)).
class DiagPhaseDifferential {
 public:
  explicit DiagPhaseDifferential(RVector phases);

  const RVector& phases() const { return phases_; }
  ScatterMatrix theta() const { return diagonal_scatter(phases_); }

  /// j e^{j phi_n} dphi_n on the diagonal.
  CMatrix apply(const RVector& d_phases) const;
  /// Gradient of J with respect to phi, given G with dJ = Re<G, dTheta>.
  RVector pullback(const CMatrix& grad_theta) const;

 private:
  RVector phases_;
};

/// Random feasible starting point plus the free parameters that produced it.
struct FeasibleStart {
  ScatterMatrix theta;
  RVector phases;                  // Diagonal only
  SymmetricGenerator generator;    // BDExponential only
};

/// Diagonal: iid uniform phases on [-pi, pi]. BDExponential: iid uniform
/// x, z on [-pi, pi]. BDProjection: projection of an iid complex Gaussian
/// matrix. Deterministic per seed.
FeasibleStart random_feasible_init(Regime regime, int n, std::uint64_t seed);

/// Text snapshot: a header line "RISTHETA 1 <N_r> <regime>" then N_r lines
/// of 2 N_r numbers (re im pairs, row-major), 17 significant digits.
void write_scatter_matrix(std::ostream& out, const ScatterMatrix& theta);
ScatterMatrix read_scatter_matrix(std::istream& in);

}  // namespace risopt
