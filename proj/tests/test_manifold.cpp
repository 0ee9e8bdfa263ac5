#include "risopt/manifold.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <sstream>

using namespace risopt;

namespace {

const Complex kJ(0.0, 1.0);

CMatrix pade_exp(const RMatrix& w) { return CMatrix(kJ * w.cast<Complex>()).exp(); }

}  // namespace

TEST(Generator, MaterializeExamples) {
  SymmetricGenerator g{RVector::Zero(2), RVector::Constant(1, kPi)};
  RMatrix expected(2, 2);
  expected << 0, kPi, kPi, 0;
  EXPECT_TRUE(materialize_generator(g) == expected);

  SymmetricGenerator d{(RVector(3) << 1, 2, 3).finished(), RVector::Zero(3)};
  EXPECT_TRUE(materialize_generator(d) == RMatrix(d.diag.asDiagonal()));
}

TEST(Generator, RoundTripIsBitwise) {
  std::mt19937_64 rng(1);
  for (int n : {1, 2, 5, 9}) {
    const RMatrix w = test::random_symmetric(n, rng, 4.0);
    const SymmetricGenerator g = extract_generator(w);
    EXPECT_EQ(g.offdiag.size(), n * (n - 1) / 2);
    EXPECT_TRUE(materialize_generator(g) == w);
  }
}

TEST(Generator, OffdiagIndexIsRowByRow) {
  int expected = 0;
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) EXPECT_EQ(offdiag_index(i, j, 6), expected++);
}

TEST(Generator, LengthMismatchThrows) {
  SymmetricGenerator g{RVector::Zero(3), RVector::Zero(2)};
  EXPECT_THROW(g.check(), DimensionError);
  EXPECT_THROW(materialize_generator(g), DimensionError);
  EXPECT_THROW(exp_parameterize(g), DimensionError);
}

TEST(ExpParameterize, ZeroAndDiagonal) {
  const ScatterMatrix i = exp_parameterize(extract_generator(RMatrix::Zero(4, 4)));
  EXPECT_NEAR((i.entries - CMatrix::Identity(4, 4)).norm(), 0.0, 1e-15);

  const RVector phi = (RVector(3) << 0.3, -2.0, 3.1).finished();
  const ScatterMatrix d = exp_parameterize(SymmetricGenerator{phi, RVector::Zero(3)});
  EXPECT_NEAR((d.entries - diagonal_scatter(phi).entries).norm(), 0.0, 1e-14);
  EXPECT_EQ(d.regime, Regime::BDExponential);
}

TEST(ExpParameterize, MatchesPadeExponential) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const RMatrix w = test::random_symmetric(4, rng, kPi);
    const ScatterMatrix t = exp_parameterize(extract_generator(w));
    EXPECT_NEAR((t.entries - pade_exp(w)).norm(), 0.0, 1e-12);
    EXPECT_TRUE(t.satisfies_invariants());
  }
}

TEST(ExpParameterize, NonFiniteInputThrows) {
  RMatrix w = RMatrix::Zero(2, 2);
  w(0, 1) = w(1, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(exp_parameterize(extract_generator(w)), NumericalError);
}

TEST(ExpDifferential, AtZeroIsJTimesDirection) {
  std::mt19937_64 rng(3);
  const ExpDifferential d(extract_generator(RMatrix::Zero(4, 4)));
  const RMatrix dw = test::random_symmetric(4, rng);
  EXPECT_NEAR((d.apply(dw) - kJ * dw.cast<Complex>()).norm(), 0.0, 1e-14);
}

TEST(ExpDifferential, CoincidentBranchIsTheLimit) {
  // Eigenvalues 1e-6 apart use the divided difference; exactly equal ones use
  // the limit. Both must agree to O(gap).
  const RVector close = (RVector(2) << 0.4, 0.4 + 1e-6).finished();
  const RVector equal = (RVector(2) << 0.4, 0.4).finished();
  const ExpDifferential a(SymmetricGenerator{close, RVector::Zero(1)});
  const ExpDifferential b(SymmetricGenerator{equal, RVector::Zero(1)});
  EXPECT_NEAR(std::abs(a.divided_differences()(0, 1) - b.divided_differences()(0, 1)), 0.0, 2e-6);
  EXPECT_NEAR(std::abs(b.divided_differences()(0, 1) - kJ * std::exp(kJ * 0.4)), 0.0, 1e-15);
}

TEST(ExpDifferential, MatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  const double eps = 1e-5;
  auto check = [&](const RMatrix& w) {
    const ExpDifferential d(extract_generator(w));
    for (int dir = 0; dir < 10; ++dir) {
      const RMatrix dw = test::random_symmetric(static_cast<int>(w.rows()), rng);
      const CMatrix fd = (pade_exp(w + eps * dw) - pade_exp(w - eps * dw)) / (2 * eps);
      EXPECT_LT((d.apply(dw) - fd).norm() / fd.norm(), 1e-6);
    }
  };
  for (int n : {2, 3, 5}) {
    check(test::random_symmetric(n, rng, kPi));
    Eigen::HouseholderQR<RMatrix> qr(RMatrix::Random(n, n));
    const RMatrix q = qr.householderQ();
    RVector lambda = RVector::Constant(n, -0.9);
    lambda(0) = 2.0;
    check(q * lambda.asDiagonal() * q.transpose());  // repeated eigenvalue
  }
}

TEST(ExpDifferential, PullbackIsTheAdjoint) {
  std::mt19937_64 rng(5);
  for (int n : {1, 3, 6}) {
    const ExpDifferential d(extract_generator(test::random_symmetric(n, rng, kPi)));
    const CMatrix g = test::random_complex(n, n, rng);
    const SymmetricGenerator dg = extract_generator(test::random_symmetric(n, rng));
    const SymmetricGenerator grad = d.pullback(g);
    const double lhs = test::re_inner(g, d.apply(dg));
    const double rhs = grad.diag.dot(dg.diag) + grad.offdiag.dot(dg.offdiag);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Projection, FixedPointAndPolarFactor) {
  std::mt19937_64 rng(6);
  const ScatterMatrix in = exp_parameterize(extract_generator(test::random_symmetric(5, rng, kPi)));
  EXPECT_NEAR((project_unitary_symmetric(in.entries).entries - in.entries).norm(), 0.0, 1e-12);

  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = 0.5;
  EXPECT_NEAR((project_unitary_symmetric(a).entries - CMatrix::Identity(2, 2)).norm(), 0.0, 1e-15);
}

TEST(Projection, ClosestUnitaryAmongRandomPerturbations) {
  std::mt19937_64 rng(7);
  const CMatrix a = test::random_complex(4, 4, rng);
  const CMatrix sym = 0.5 * (a + a.transpose());
  const ScatterMatrix t = project_unitary_symmetric(a);
  EXPECT_LT(t.unitarity_residual(), 1e-12);
  EXPECT_LT(t.symmetry_residual(), 1e-10);
  const double best = (t.entries - sym).norm();
  for (int trial = 0; trial < 1000; ++trial) {
    // Unitary perturbation exp(i eps H) Theta with H Hermitian.
    const CMatrix g = test::random_complex(4, 4, rng);
    const CMatrix h = 0.5 * (g + g.adjoint());
    const CMatrix u = CMatrix(kJ * 0.05 * h).exp() * t.entries;
    EXPECT_GE((u - sym).norm(), best - 1e-12);
  }
}

TEST(Projection, InvariantsAndIdempotence) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 << (trial % 4);
    const ScatterMatrix t = project_unitary_symmetric(test::random_complex(n, n, rng));
    EXPECT_EQ(t.regime, Regime::BDProjection);
    EXPECT_LE(t.unitarity_residual(), 1e-10 * n);
    EXPECT_LE(t.symmetry_residual(), 1e-10 * n);
    EXPECT_TRUE(t.satisfies_invariants());
    EXPECT_LE((project_unitary_symmetric(t.entries).entries - t.entries).norm(), 1e-12 * n);
  }
}

TEST(Projection, RankDeficientSymmetricPart) {
  // Antisymmetric input: symmetric part is zero.
  CMatrix a = CMatrix::Zero(3, 3);
  a(0, 1) = 1.0;
  a(1, 0) = -1.0;
  const ScatterMatrix t = project_unitary_symmetric(a);
  EXPECT_TRUE(t.satisfies_invariants());
  // Rank one symmetric part.
  CVector v(4);
  v << 1.0, Complex(0, 1), 0.5, -2.0;
  const ScatterMatrix r = project_unitary_symmetric(v * v.transpose());
  EXPECT_TRUE(r.satisfies_invariants());
}

TEST(Projection, NonFiniteInputThrows) {
  CMatrix a = CMatrix::Identity(2, 2);
  a(1, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(project_unitary_symmetric(a), NumericalError);
}

TEST(DiagPhase, DifferentialExamples) {
  const DiagPhaseDifferential d(RVector::Zero(3));
  const CMatrix out = d.apply((RVector(3) << 1, 0, 0).finished());
  CMatrix expected = CMatrix::Zero(3, 3);
  expected(0, 0) = kJ;
  EXPECT_TRUE(out == expected);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  RVector phi(5), dphi(5);
  for (int i = 0; i < 5; ++i) {
    phi(i) = u(rng);
    dphi(i) = u(rng);
  }
  const DiagPhaseDifferential dp(phi);
  const double eps = 1e-6;
  const CMatrix fd = (diagonal_scatter(phi + eps * dphi).entries - diagonal_scatter(phi - eps * dphi).entries) /
                     (2 * eps);
  const CMatrix an = dp.apply(dphi);
  EXPECT_LT((an - fd).norm() / fd.norm(), 1e-8);
  EXPECT_TRUE(an.isDiagonal(0.0));

  const CMatrix g = test::random_complex(5, 5, rng);
  EXPECT_NEAR(test::re_inner(g, an), dp.pullback(g).dot(dphi), 1e-12);
}

TEST(DiagonalScatter, Invariants) {
  const ScatterMatrix d = diagonal_scatter((RVector(4) << 0.1, 2.0, -3.0, 7.0).finished());
  EXPECT_EQ(d.regime, Regime::Diagonal);
  EXPECT_TRUE(d.satisfies_invariants());
  ScatterMatrix bad = d;
  bad.entries(0, 1) = 1e-300;
  EXPECT_FALSE(bad.satisfies_invariants());
}

TEST(RandomInit, DeterministicFeasibleAndSeedDependent) {
  for (Regime r : {Regime::Diagonal, Regime::BDExponential, Regime::BDProjection}) {
    const FeasibleStart a = random_feasible_init(r, 6, 11);
    const FeasibleStart b = random_feasible_init(r, 6, 11);
    const FeasibleStart c = random_feasible_init(r, 6, 12);
    EXPECT_TRUE(a.theta.entries == b.theta.entries) << to_string(r);
    EXPECT_GT((a.theta.entries - c.theta.entries).norm(), 0.0) << to_string(r);
    EXPECT_TRUE(a.theta.satisfies_invariants()) << to_string(r);
    EXPECT_EQ(a.theta.regime, r);
  }
  const FeasibleStart d = random_feasible_init(Regime::Diagonal, 6, 1);
  EXPECT_EQ(d.phases.size(), 6);
  EXPECT_TRUE((d.phases.array().abs() <= kPi).all());
  const FeasibleStart e = random_feasible_init(Regime::BDExponential, 6, 1);
  EXPECT_EQ(e.generator.offdiag.size(), 15);
  EXPECT_NEAR((exp_parameterize(e.generator).entries - e.theta.entries).norm(), 0.0, 1e-15);
}

TEST(Serialization, RoundTripIsExact) {
  std::mt19937_64 rng(10);
  const ScatterMatrix t = project_unitary_symmetric(test::random_complex(5, 5, rng));
  std::stringstream s;
  write_scatter_matrix(s, t);
  EXPECT_EQ(s.str().rfind("RISTHETA 1 5 bd-proj\n", 0), 0u);
  const ScatterMatrix back = read_scatter_matrix(s);
  EXPECT_TRUE(back.entries == t.entries);
  EXPECT_EQ(back.regime, t.regime);
}

TEST(Serialization, MalformedInputThrows) {
  std::stringstream bad("RISTHETA 1 2 diag\n1 0 0 0\n");
  EXPECT_THROW(read_scatter_matrix(bad), std::runtime_error);
  std::stringstream header("THETA 1 2 diag\n");
  EXPECT_THROW(read_scatter_matrix(header), std::runtime_error);
}

TEST(Regime, NamesRoundTrip) {
  for (Regime r : {Regime::Diagonal, Regime::BDExponential, Regime::BDProjection})
    EXPECT_EQ(parse_regime(to_string(r)), r);
  EXPECT_FALSE(parse_regime("none").has_value());
}
